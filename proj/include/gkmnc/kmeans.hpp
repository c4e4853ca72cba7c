#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gkmnc {

// Fitted partition of normalized rows. Centroids are rows of `centroids`,
// sorted lexicographically; `assignments` indexes into them.
struct ClusterModel {
  std::size_t k = 0;
  Eigen::MatrixXd centroids;  // k x d
  std::vector<std::size_t> assignments;
  double within_cluster_sse = 0.0;
  std::optional<double> dbi;  // absent for k = 1
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
};

// One Lloyd run from fixed starting centroids. `sse_trace[i]` is the
// objective after iteration i, i.e. never increasing.
struct LloydRun {
  Eigen::MatrixXd centroids;
  std::vector<std::size_t> assignments;
  std::vector<double> sse_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

LloydRun lloyd(const Eigen::MatrixXd& rows, Eigen::MatrixXd centroids, std::size_t max_iterations = 300);

std::size_t count_distinct_rows(const Eigen::MatrixXd& rows);

// Best of `options.restarts` seeded Lloyd runs by SSE. Throws KExceedsRows
// when the rows hold fewer than k distinct points.
ClusterModel kmeans_fit(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

// Nearest centroid by Euclidean distance, lowest index on ties.
std::size_t assign(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& point);

double davies_bouldin(const Eigen::MatrixXd& rows, const ClusterModel& model);

struct KSelection {
  ClusterModel chosen;
  std::vector<std::pair<std::size_t, double>> dbi_curve;  // (k, DBI), k ascending
};

// Fits k = 2..k_max (stopping early once k exceeds the distinct point count)
// and keeps the lowest DBI, smallest k on ties.
KSelection select_k(const Eigen::MatrixXd& rows, std::size_t k_max, std::uint64_t seed,
                    const KMeansOptions& options = {});

}  // namespace gkmnc
