#include <cmath>
#include <random>

#include "doctest.h"
#include "gkmnc/error.hpp"
#include "gkmnc/mlp.hpp"
#include "support.hpp"

using namespace gkmnc;

TEST_CASE("backprop gradient matches central differences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 1 + rng() % 6, hidden = 1 + rng() % 6, rows = 5 + rng() % 20;
    auto model = make_mlp(in, hidden, rng());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
      y[i] = rng() % 2;
    }
    const auto analytic = mlp_loss_and_gradient(model, x, y).gradient;
    const Objective loss = [&](const Eigen::VectorXd& p) {
      auto m = model;
      m.set_parameters(p);
      return mlp_loss_and_gradient(m, x, y).loss;
    };
    const auto numeric = finite_difference_gradient(loss, model.parameters(), 1e-6);
    for (Eigen::Index k = 0; k < analytic.size(); ++k) {
      const double scale = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-3});
      worst = std::max(worst, std::abs(analytic[k] - numeric[k]) / scale);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("parameter layout round trip") {
  auto m = make_mlp(3, 2, 9);
  CHECK(m.parameter_count() == 11);
  CHECK(m.architecture() == "3-2-1");
  const auto p = m.parameters();
  CHECK(p.cwiseAbs().maxCoeff() <= 0.5);
  auto copy = make_mlp(3, 2, 10);
  copy.set_parameters(p);
  CHECK(copy.parameters() == p);
  CHECK(copy.hidden_weights == m.hidden_weights);
  CHECK_THROWS_AS(copy.set_parameters(Eigen::VectorXd::Zero(3)), Error);
  CHECK(make_mlp(3, 2, 9).parameters() == p);
}

TEST_CASE("thresholds and hidden size choice") {
  CHECK(threshold_output(0.5) == ClassLabel::Negative);
  CHECK(threshold_output(0.5000001) == ClassLabel::Positive);
  CHECK(logistic(0.0) == 0.5);
  CHECK(std::isfinite(logistic(-1000.0)));
  const std::pair<std::size_t, double> acc[] = {{1, 0.7}, {2, 0.8}, {3, 0.8}, {4, 0.75}};
  CHECK(pick_hidden_size(acc) == 2);
}

TEST_CASE("training learns xor and separated blobs") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<ClassLabel> y{ClassLabel::Negative, ClassLabel::Positive, ClassLabel::Positive,
                                  ClassLabel::Negative};
  bool solved = false;
  for (std::uint64_t seed = 1; seed <= 5 && !solved; ++seed) {
    const auto t = mlp_train(x, y, {4, seed, {2000, 1e-8, 0}, {}});
    for (std::size_t i = 1; i < t.loss_trace.size(); ++i) CHECK(t.loss_trace[i] <= t.loss_trace[i - 1]);
    solved = true;
    for (Eigen::Index i = 0; i < 4; ++i) solved &= mlp_classify(t.model, x.row(i).transpose()) == y[i];
  }
  CHECK(solved);

  const auto blobs = test::blobs(50, 8);
  const auto model = mlp_train(blobs, {2, 3, {}, {}});
  std::size_t hits = 0;
  const auto truth = blobs.targets();
  for (std::size_t i = 0; i < blobs.size(); ++i) hits += mlp_classify(model, blobs[i].numeric_vector()) == truth[i];
  CHECK(hits >= 97);
}

TEST_CASE("single-class partitions train a constant model") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  const std::vector<ClassLabel> y(5, ClassLabel::Positive);
  const auto t = mlp_train(x, y, {3, 1, {}, {}});
  REQUIRE(t.model.constant.has_value());
  CHECK(mlp_output(t.model, Eigen::Vector2d(9, 9)) == 1.0);
  CHECK_THROWS_AS(mlp_train(Eigen::MatrixXd(0, 2), std::vector<ClassLabel>{}, {}), Error);
}

TEST_CASE("hidden size search is deterministic and reports every candidate") {
  const auto train = test::blobs(30, 1, 3.0);
  const auto valid = test::blobs(20, 2, 3.0);
  const std::size_t cand[] = {1, 2, 3};
  const auto a = search_hidden_size(train, valid, cand, 5);
  const auto b = search_hidden_size(train, valid, cand, 5);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy.size() == 3);
  CHECK(a.best == pick_hidden_size(a.accuracy));
}
