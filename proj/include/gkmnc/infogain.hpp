#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gkmnc/dataset.hpp"

namespace gkmnc {

// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(std::span<const std::size_t> counts);

struct GainRatio {
  double info_gain = 0.0;
  double split_info = 0.0;
  double ratio = 0.0;
};

// Throws SplitInfoZero for a single-valued attribute.
GainRatio gain_ratio(const DataTable& table, std::size_t column);

struct GainRatioEntry {
  std::size_t column = 0;  // schema position; attribute number is column + 1
  std::string name;
  GainRatio value;
  bool excluded = false;
  std::string reason;
  std::size_t rank = 0;  // 1 = largest ratio; 0 when excluded
};

struct GainRatioReport {
  std::vector<GainRatioEntry> entries;  // schema order

  const GainRatioEntry* find(std::size_t column) const;
  // attribute,name,info_gain,split_info,gain_ratio,rank
  std::string to_csv() const;
};

struct GroupingSelection {
  std::optional<std::size_t> column;
  GainRatioReport report;
};

// Largest gain ratio above `threshold`; ties go to the lowest column.
// Tables without nominal attributes yield no selection and an empty report.
GroupingSelection select_grouping_attribute(const DataTable& table, double threshold = 0.01);

// Element-wise mean of reports over the same schema (e.g. across folds);
// ranks are recomputed on the means.
GainRatioReport mean_report(std::span<const GainRatioReport> reports);

std::map<std::string, DataTable> partition_by_attribute(const DataTable& table, std::size_t column);

}  // namespace gkmnc
