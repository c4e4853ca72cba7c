#include "gkmnc/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "gkmnc/error.hpp"
#include "gkmnc/seed.hpp"

namespace gkmnc {

namespace {

bool row_less(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m(a, j) < m(b, j)) return true;
    if (m(a, j) > m(b, j)) return false;
  }
  return false;
}

double assign_all(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centroids, std::vector<std::size_t>& out,
                  std::size_t& changes) {
  changes = 0;
  double sse = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (rows.row(i) - centroids.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(j);
      }
    }
    if (out[static_cast<std::size_t>(i)] != best) ++changes;
    out[static_cast<std::size_t>(i)] = best;
    sse += best_d;
  }
  return sse;
}

double sse_of(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centroids, const std::vector<std::size_t>& a) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    sse += (rows.row(i) - centroids.row(static_cast<Eigen::Index>(a[static_cast<std::size_t>(i)]))).squaredNorm();
  return sse;
}

// Gives every empty cluster the point farthest from its current centroid,
// taken from a cluster that keeps at least one member.
void repair_empty(const Eigen::MatrixXd& rows, Eigen::MatrixXd& centroids, std::vector<std::size_t>& a) {
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> sizes(k, 0);
  for (auto c : a) ++sizes[c];
  for (std::size_t j = 0; j < k; ++j) {
    if (sizes[j] != 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const auto c = a[static_cast<std::size_t>(i)];
      if (sizes[c] < 2) continue;
      const double d = (rows.row(i) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) break;  // fewer points than clusters; cannot happen after the distinct-point check
    --sizes[a[static_cast<std::size_t>(far)]];
    a[static_cast<std::size_t>(far)] = j;
    sizes[j] = 1;
    centroids.row(static_cast<Eigen::Index>(j)) = rows.row(far);
  }
}

void update_means(const Eigen::MatrixXd& rows, Eigen::MatrixXd& centroids, const std::vector<std::size_t>& a) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
  std::vector<std::size_t> sizes(static_cast<std::size_t>(centroids.rows()), 0);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto c = a[static_cast<std::size_t>(i)];
    sums.row(static_cast<Eigen::Index>(c)) += rows.row(i);
    ++sizes[c];
  }
  for (Eigen::Index j = 0; j < centroids.rows(); ++j)
    if (sizes[static_cast<std::size_t>(j)] > 0)
      centroids.row(j) = sums.row(j) / static_cast<double>(sizes[static_cast<std::size_t>(j)]);
}

Eigen::MatrixXd seeded_start(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd start(static_cast<Eigen::Index>(k), rows.cols());
  std::size_t chosen = 0;
  for (auto i : order) {
    bool duplicate = false;
    for (std::size_t c = 0; c < chosen && !duplicate; ++c)
      duplicate = start.row(static_cast<Eigen::Index>(c)) == rows.row(i);
    if (duplicate) continue;
    start.row(static_cast<Eigen::Index>(chosen++)) = rows.row(i);
    if (chosen == k) break;
  }
  return start;
}

ClusterModel canonicalize(const Eigen::MatrixXd& rows, const LloydRun& run) {
  const auto k = static_cast<std::size_t>(run.centroids.rows());
  std::vector<Eigen::Index> order(k);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return row_less(run.centroids, a, b); });
  std::vector<std::size_t> remap(k);
  ClusterModel m;
  m.k = k;
  m.centroids.resize(run.centroids.rows(), run.centroids.cols());
  for (std::size_t pos = 0; pos < k; ++pos) {
    m.centroids.row(static_cast<Eigen::Index>(pos)) = run.centroids.row(order[pos]);
    remap[static_cast<std::size_t>(order[pos])] = pos;
  }
  m.assignments.reserve(run.assignments.size());
  for (auto a : run.assignments) m.assignments.push_back(remap[a]);
  m.within_cluster_sse = sse_of(rows, m.centroids, m.assignments);
  return m;
}

}  // namespace

LloydRun lloyd(const Eigen::MatrixXd& rows, Eigen::MatrixXd centroids, std::size_t max_iterations) {
  LloydRun run;
  run.assignments.assign(static_cast<std::size_t>(rows.rows()), std::numeric_limits<std::size_t>::max());
  std::size_t changes = 0;
  assign_all(rows, centroids, run.assignments, changes);
  while (run.iterations < max_iterations) {
    repair_empty(rows, centroids, run.assignments);
    update_means(rows, centroids, run.assignments);
    run.sse_trace.push_back(sse_of(rows, centroids, run.assignments));
    ++run.iterations;
    assign_all(rows, centroids, run.assignments, changes);
    if (changes == 0) {
      run.converged = true;
      break;
    }
  }
  run.centroids = std::move(centroids);
  return run;
}

std::size_t count_distinct_rows(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return row_less(rows, a, b); });
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (rows.row(order[i]) != rows.row(order[i - 1])) ++distinct;
  return distinct;
}

ClusterModel kmeans_fit(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > static_cast<std::size_t>(rows.rows()))
    throw Error(ErrorCode::KExceedsRows,
                "k=" + std::to_string(k) + " exceeds row count " + std::to_string(rows.rows()));
  if (const auto distinct = count_distinct_rows(rows); distinct < k)
    throw Error(ErrorCode::KExceedsRows,
                "k=" + std::to_string(k) + " exceeds the " + std::to_string(distinct) + " distinct points");

  std::optional<ClusterModel> best;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    const auto run = lloyd(rows, seeded_start(rows, k, derive_seed(seed, r)), options.max_iterations);
    auto model = canonicalize(rows, run);
    if (!best || model.within_cluster_sse < best->within_cluster_sse) best = std::move(model);
  }
  if (k >= 2) best->dbi = davies_bouldin(rows, *best);
  return *best;
}

std::size_t assign(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& point) {
  if (centroids.rows() == 0) throw Error(ErrorCode::EmptyCentroidList, "no centroids to assign to");
  if (centroids.cols() != point.size())
    throw Error(ErrorCode::DimensionMismatch, "point has " + std::to_string(point.size()) +
                                                  " features, centroids have " + std::to_string(centroids.cols()));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

double davies_bouldin(const Eigen::MatrixXd& rows, const ClusterModel& model) {
  if (model.k < 2) throw Error(ErrorCode::SingleCluster, "Davies-Bouldin index needs at least two clusters");
  if (model.assignments.size() != static_cast<std::size_t>(rows.rows()))
    throw Error(ErrorCode::DimensionMismatch, "assignments do not match rows");
  const auto k = static_cast<Eigen::Index>(model.k);
  Eigen::VectorXd scatter = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(model.assignments[static_cast<std::size_t>(i)]);
    scatter[c] += (rows.row(i) - model.centroids.row(c)).norm();
    sizes[c] += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c)
    if (sizes[c] > 0) scatter[c] /= sizes[c];

  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const double separation = (model.centroids.row(i) - model.centroids.row(j)).norm();
      const double r = separation > 0.0 ? (scatter[i] + scatter[j]) / separation
                                        : std::numeric_limits<double>::infinity();
      worst = std::max(worst, r);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

KSelection select_k(const Eigen::MatrixXd& rows, std::size_t k_max, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k_max < 2) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 2");
  const auto distinct = count_distinct_rows(rows);
  if (distinct < 2)
    throw Error(ErrorCode::KExceedsRows, "fewer than two distinct points; the partition cannot be clustered");
  const std::size_t upper = std::min(k_max, distinct);

  KSelection out;
  std::optional<ClusterModel> best;
  for (std::size_t k = 2; k <= upper; ++k) {
    auto model = kmeans_fit(rows, k, derive_seed(seed, k), options);
    out.dbi_curve.emplace_back(k, *model.dbi);
    if (!best || *model.dbi < *best->dbi) best = std::move(model);
  }
  out.chosen = std::move(*best);
  return out;
}

}  // namespace gkmnc
