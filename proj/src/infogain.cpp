#include "gkmnc/infogain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gkmnc/error.hpp"
#include "text.hpp"

namespace gkmnc {

double entropy(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw Error(ErrorCode::AllZero, "entropy of an all-zero count vector");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

struct ValueCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t total() const { return positive + negative; }
};

std::map<std::string, ValueCounts> tally(const DataTable& table, std::size_t slot) {
  std::map<std::string, ValueCounts> counts;
  for (const auto& r : table.rows()) {
    if (!r.target) throw Error(ErrorCode::UnknownTargetLabel, "gain ratio needs labelled rows");
    auto& c = counts[r.nominal[slot]];
    (*r.target == ClassLabel::Positive ? c.positive : c.negative) += 1;
  }
  return counts;
}

void assign_ranks(GainRatioReport& report) {
  std::vector<GainRatioEntry*> live;
  for (auto& e : report.entries) {
    e.rank = 0;
    if (!e.excluded) live.push_back(&e);
  }
  std::stable_sort(live.begin(), live.end(),
                   [](const auto* a, const auto* b) { return a->value.ratio > b->value.ratio; });
  for (std::size_t i = 0; i < live.size(); ++i) live[i]->rank = i + 1;
}

}  // namespace

GainRatio gain_ratio(const DataTable& table, std::size_t column) {
  if (table.empty()) throw Error(ErrorCode::EmptyInput, "gain ratio of an empty table");
  const auto slot = table.schema().nominal_slot(column);
  const auto counts = tally(table, slot);

  ValueCounts all;
  std::vector<std::size_t> value_freq;
  for (const auto& [label, c] : counts) {
    all.positive += c.positive;
    all.negative += c.negative;
    value_freq.push_back(c.total());
  }
  const double n = static_cast<double>(all.total());
  const std::size_t class_counts[2] = {all.positive, all.negative};
  const double class_entropy = entropy(class_counts);

  double conditional = 0.0;
  for (const auto& [label, c] : counts) {
    const std::size_t cc[2] = {c.positive, c.negative};
    conditional += static_cast<double>(c.total()) / n * entropy(cc);
  }

  GainRatio g;
  // clamp rounding noise; gain is non-negative in exact arithmetic
  g.info_gain = std::max(0.0, class_entropy - conditional);
  g.split_info = entropy(value_freq);
  if (counts.size() < 2 || g.split_info <= 0.0)
    throw Error(ErrorCode::SplitInfoZero,
                "attribute '" + table.schema().attribute(column).name + "' has a single value");
  g.ratio = g.info_gain / g.split_info;
  return g;
}

const GainRatioEntry* GainRatioReport::find(std::size_t column) const {
  for (const auto& e : entries)
    if (e.column == column) return &e;
  return nullptr;
}

std::string GainRatioReport::to_csv() const {
  std::string out = "attribute,name,info_gain,split_info,gain_ratio,rank\n";
  for (const auto& e : entries) {
    out += std::to_string(e.column + 1) + "," + text::csv_escape(e.name) + ",";
    if (e.excluded) {
      out += ",,,excluded:" + e.reason + "\n";
      continue;
    }
    out += text::format_fixed(e.value.info_gain, 6) + "," + text::format_fixed(e.value.split_info, 6) + "," +
           text::format_fixed(e.value.ratio, 6) + "," + std::to_string(e.rank) + "\n";
  }
  return out;
}

GroupingSelection select_grouping_attribute(const DataTable& table, double threshold) {
  if (table.empty()) throw Error(ErrorCode::EmptyInput, "cannot select a grouping attribute on an empty table");
  GroupingSelection sel;
  for (auto column : table.schema().nominal_columns()) {
    GainRatioEntry e;
    e.column = column;
    e.name = table.schema().attribute(column).name;
    try {
      e.value = gain_ratio(table, column);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::SplitInfoZero) throw;
      e.excluded = true;
      e.reason = "single-valued";
    }
    sel.report.entries.push_back(std::move(e));
  }
  assign_ranks(sel.report);
  for (const auto& e : sel.report.entries) {
    if (e.rank == 1 && e.value.ratio > threshold) sel.column = e.column;
  }
  return sel;
}

GainRatioReport mean_report(std::span<const GainRatioReport> reports) {
  if (reports.empty()) return {};
  GainRatioReport out = reports.front();
  for (auto& e : out.entries) {
    GainRatio sum;
    std::size_t live = 0;
    for (const auto& r : reports) {
      const auto* other = r.find(e.column);
      if (!other) throw Error(ErrorCode::InvalidArgument, "reports cover different attributes");
      if (other->excluded) continue;
      sum.info_gain += other->value.info_gain;
      sum.split_info += other->value.split_info;
      sum.ratio += other->value.ratio;
      ++live;
    }
    e.excluded = live == 0;
    e.reason = live == 0 ? "single-valued" : "";
    if (live > 0) {
      const auto d = static_cast<double>(live);
      e.value = {sum.info_gain / d, sum.split_info / d, sum.ratio / d};
    }
  }
  assign_ranks(out);
  return out;
}

std::map<std::string, DataTable> partition_by_attribute(const DataTable& table, std::size_t column) {
  const auto slot = table.schema().nominal_slot(column);
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < table.size(); ++i) members[table[i].nominal[slot]].push_back(i);
  std::map<std::string, DataTable> groups;
  for (const auto& [label, idx] : members) groups.emplace(label, table.subset(idx));
  return groups;
}

}  // namespace gkmnc
