#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "gkmnc/error.hpp"
#include "gkmnc/kmeans.hpp"

using namespace gkmnc;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

ClusterModel manual(const Eigen::MatrixXd& rows, const std::vector<std::size_t>& a, std::size_t k) {
  ClusterModel m;
  m.k = k;
  m.assignments = a;
  m.centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), rows.cols());
  Eigen::VectorXd n = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    m.centroids.row(static_cast<Eigen::Index>(a[i])) += rows.row(i);
    n[static_cast<Eigen::Index>(a[i])] += 1;
  }
  for (Eigen::Index c = 0; c < m.centroids.rows(); ++c) m.centroids.row(c) /= n[c];
  return m;
}

// Davies-Bouldin written out from the definition with plain loops.
double dbi_oracle(const Eigen::MatrixXd& rows, const std::vector<std::size_t>& a, std::size_t k) {
  std::vector<std::vector<double>> mu(k, std::vector<double>(rows.cols(), 0.0));
  std::vector<double> n(k, 0.0), s(k, 0.0);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    n[a[i]] += 1;
    for (Eigen::Index d = 0; d < rows.cols(); ++d) mu[a[i]][d] += rows(i, d);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : mu[c]) v /= n[c];
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double sq = 0;
    for (Eigen::Index d = 0; d < rows.cols(); ++d) sq += std::pow(rows(i, d) - mu[a[i]][d], 2);
    s[a[i]] += std::sqrt(sq) / n[a[i]];
  }
  double total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double sq = 0;
      for (Eigen::Index d = 0; d < rows.cols(); ++d) sq += std::pow(mu[i][d] - mu[j][d], 2);
      worst = std::max(worst, (s[i] + s[j]) / std::sqrt(sq));
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

Eigen::MatrixXd two_blobs(std::size_t per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(2 * per_blob), 2);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double off = i < static_cast<Eigen::Index>(per_blob) ? 0.0 : 8.0;
    m(i, 0) = off + g(rng);
    m(i, 1) = off + g(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("davies-bouldin hand values") {
  const auto rows = column({0, 2, 10, 12});
  const auto m = manual(rows, {0, 0, 1, 1}, 2);
  CHECK(std::abs(davies_bouldin(rows, m) - 0.2) < 1e-10);

  const auto singles = column({0, 5});
  CHECK(davies_bouldin(singles, manual(singles, {0, 1}, 2)) == 0.0);

  ClusterModel one = manual(rows, {0, 0, 0, 0}, 1);
  CHECK_THROWS_AS(davies_bouldin(rows, one), Error);
}

TEST_CASE("davies-bouldin matches the loop oracle") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t k = 2 + rng() % 4;
    Eigen::MatrixXd rows(30, 3);
    std::vector<std::size_t> a(30);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      a[i] = static_cast<std::size_t>(i) % k;
      for (Eigen::Index d = 0; d < 3; ++d) rows(i, d) = u(rng) + 3.0 * static_cast<double>(a[i]);
    }
    CHECK(std::abs(davies_bouldin(rows, manual(rows, a, k)) - dbi_oracle(rows, a, k)) < 1e-10);
  }
}

TEST_CASE("kmeans finds the exhaustive optimum on small 1-D sets") {
  const auto rows = column({0, 1, 9, 10});
  const auto m = kmeans_fit(rows, 2, 3);
  CHECK(m.centroids(0, 0) == doctest::Approx(0.5));
  CHECK(m.centroids(1, 0) == doctest::Approx(9.5));
  CHECK(m.within_cluster_sse == doctest::Approx(1.0));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd pts(9, 1);
    for (Eigen::Index i = 0; i < 9; ++i) pts(i, 0) = u(rng);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << 9); ++mask) {
      std::vector<std::size_t> a(9);
      for (int i = 0; i < 9; ++i) a[i] = (mask >> i) & 1u;
      const auto mm = manual(pts, a, 2);
      double sse = 0;
      for (Eigen::Index i = 0; i < 9; ++i) sse += std::pow(pts(i, 0) - mm.centroids(a[i], 0), 2);
      best = std::min(best, sse);
    }
    CHECK(kmeans_fit(pts, 2, static_cast<std::uint64_t>(trial)).within_cluster_sse == doctest::Approx(best));
  }
}

TEST_CASE("lloyd objective never increases") {
  const auto rows = two_blobs(60, 2);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd start(4, 2);
    for (Eigen::Index c = 0; c < 4; ++c) start.row(c) = rows.row(static_cast<Eigen::Index>(rng() % rows.rows()));
    const auto run = lloyd(rows, start);
    for (std::size_t i = 1; i < run.sse_trace.size(); ++i) CHECK(run.sse_trace[i] <= run.sse_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("kmeans determinism, ordering and errors") {
  const auto rows = two_blobs(40, 3);
  const auto a = kmeans_fit(rows, 3, 77);
  const auto b = kmeans_fit(rows, 3, 77);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  for (Eigen::Index c = 1; c < a.centroids.rows(); ++c)
    CHECK(std::lexicographical_compare(a.centroids.row(c - 1).begin(), a.centroids.row(c - 1).end(),
                                       a.centroids.row(c).begin(), a.centroids.row(c).end()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    CHECK(assign(a.centroids, rows.row(i).transpose()) == a.assignments[i]);

  const auto dup = column({1, 1, 1, 2});
  try {
    kmeans_fit(dup, 3, 1);
    FAIL("k above the distinct count accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KExceedsRows);
  }
  CHECK_THROWS_AS(assign(Eigen::MatrixXd(0, 1), Eigen::VectorXd::Zero(1)), Error);
}

TEST_CASE("select_k picks two for two separated blobs") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sel = select_k(two_blobs(50, seed), 8, seed);
    CHECK(sel.chosen.k == 2);
    CHECK(sel.dbi_curve.size() == 7);
    CHECK(sel.dbi_curve.front().first == 2);
  }
  // stops at the distinct-point count
  CHECK(select_k(column({0, 0, 1, 5, 5}), 8, 1).dbi_curve.size() == 2);
}
