#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gkmnc/pipeline.hpp"

namespace gkmnc {

// One row of the speedup table.
struct BenchRow {
  std::string label;  // config name given by the caller
  std::string model_name;
  std::size_t partitions = 0;
  std::size_t workers = 1;
  double average_leaf_seconds = 0.0;
  double leaf_wall_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<LeafTrainInfo> leaves;
};

BenchRow bench_once(const DataTable& train, const PipelineConfig& config, std::size_t workers,
                    std::string label = {});

std::string bench_csv(std::span<const BenchRow> rows);  // label,model,partitions,workers,avg_leaf_seconds,total_seconds

// Least-squares slope of log(seconds) against log(n). Needs two distinct n.
double loglog_slope(std::span<const std::pair<double, double>> points);

struct ScalingPoint {
  std::size_t n = 0;
  double seconds = 0.0;  // median over repeats
};

// Times one universal classifier of config.classifier on nested random
// subsets of `table` of each requested size. MLP uses config.hidden_size or 3.
std::vector<ScalingPoint> measure_scaling(const DataTable& table, const PipelineConfig& config,
                                          std::span<const std::size_t> sizes, std::size_t repeats = 3);

double scaling_slope(std::span<const ScalingPoint> points);

}  // namespace gkmnc
