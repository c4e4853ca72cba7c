#include "gkmnc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "gkmnc/error.hpp"
#include "gkmnc/seed.hpp"
#include "text.hpp"

namespace gkmnc {

BenchRow bench_once(const DataTable& train, const PipelineConfig& config, std::size_t workers, std::string label) {
  PipelineConfig c = config;
  c.worker_count = workers;
  const auto result = train_gkmnc(train, std::nullopt, c);
  BenchRow row;
  row.label = std::move(label);
  row.model_name = result.model.name();
  row.partitions = result.model.leaf_count();
  row.workers = workers;
  row.leaves = result.report.leaves;
  row.leaf_wall_seconds = result.report.leaf_wall_seconds;
  row.total_seconds = result.report.total_seconds;
  double sum = 0.0;
  for (const auto& l : row.leaves) sum += l.seconds;
  row.average_leaf_seconds = row.leaves.empty() ? 0.0 : sum / static_cast<double>(row.leaves.size());
  return row;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::string out = "label,model,partitions,workers,avg_leaf_seconds,total_seconds\n";
  for (const auto& r : rows)
    out += text::csv_escape(r.label) + "," + r.model_name + "," + std::to_string(r.partitions) + "," +
           std::to_string(r.workers) + "," + text::format_fixed(r.average_leaf_seconds, 6) + "," +
           text::format_fixed(r.total_seconds, 6) + "\n";
  return out;
}

double loglog_slope(std::span<const std::pair<double, double>> points) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [n, t] : points) {
    if (!(n > 0.0) || !(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-log fit needs positive values");
    logs.emplace_back(std::log(n), std::log(t));
  }
  if (logs.size() < 2) throw Error(ErrorCode::InvalidArgument, "log-log fit needs two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(logs.size());
  my /= static_cast<double>(logs.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : logs) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "log-log fit needs two distinct sizes");
  return sxy / sxx;
}

std::vector<ScalingPoint> measure_scaling(const DataTable& table, const PipelineConfig& config,
                                          std::span<const std::size_t> sizes, std::size_t repeats) {
  if (repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(config.seed, "scaling", 0));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<ScalingPoint> out;
  for (const auto n : sizes) {
    if (n == 0 || n > table.size())
      throw Error(ErrorCode::InvalidArgument,
                  "scaling size " + std::to_string(n) + " outside 1.." + std::to_string(table.size()));
    const auto part = table.subset(std::span(order).first(n));
    const Eigen::MatrixXd raw = part.numeric_matrix();
    const auto targets = part.targets();
    std::vector<double> times;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      if (config.classifier == ClassifierKind::Mlp) {
        mlp_train(raw, targets,
                  MlpTrainOptions{config.hidden_size.value_or(3), config.seed, config.mlp_cg, config.line_search});
      } else {
        GpcTrainOptions options;
        options.kernel = config.gpc_kernel;
        options.optimize_hyperparams = config.gpc_optimize_hyperparams;
        options.size_cap = config.gpc_size_cap;
        options.seed = config.seed;
        options.cg = config.gpc_cg;
        options.ls = config.line_search;
        gpc_train(raw, targets, options);
      }
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    out.push_back({n, times[times.size() / 2]});
  }
  return out;
}

double scaling_slope(std::span<const ScalingPoint> points) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) xy.emplace_back(static_cast<double>(p.n), p.seconds);
  return loglog_slope(xy);
}

}  // namespace gkmnc
