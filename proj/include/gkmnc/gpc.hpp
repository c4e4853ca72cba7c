#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gkmnc/dataset.hpp"
#include "gkmnc/optim.hpp"

namespace gkmnc {

// Squared-exponential kernel sigma_f^2 exp(-|x - x'|^2 / (2 l^2)); `jitter`
// is added to the diagonal of training covariances only.
struct KernelParams {
  double signal_variance = 1.0;
  double length_scale = 1.0;
  double jitter = 1e-8;
};

// p(C1 | f) = 1 / (1 + exp(-f)), evaluated without overflow.
double logistic_link(double f);

// Symmetric training covariance, jitter on the diagonal.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const KernelParams& params);
// Cross covariance between two input sets (no jitter).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, const KernelParams& params);

struct LaplaceOptions {
  double tolerance = 1e-6;  // |change in Psi|
  double stationarity_tolerance = 1e-6;
  std::size_t max_iterations = 100;
};

// Newton mode-finding for the logistic-likelihood Laplace approximation.
struct LaplaceResult {
  Eigen::VectorXd mode;        // f-hat
  Eigen::VectorXd alpha;       // grad log p(y | f-hat); f-hat = K alpha at the optimum
  Eigen::VectorXd newton_a;    // a with f = K a from the last Newton step
  Eigen::VectorXd sqrt_w;      // W^{1/2} at the mode
  Eigen::MatrixXd chol_lower;  // L with L L^T = I + W^{1/2} K W^{1/2}
  double log_marginal = 0.0;   // approximate log p(y | X, theta)
  std::vector<double> psi_trace;
  std::size_t iterations = 0;
};

// `targets` holds +1/-1. `warm_start` may give (f, a) from a nearby problem.
LaplaceResult laplace_mode(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& targets,
                           const LaplaceOptions& options = {},
                           const std::pair<Eigen::VectorXd, Eigen::VectorXd>* warm_start = nullptr);

Eigen::VectorXd to_sign_targets(std::span<const ClassLabel> labels);

// Gradient of the Laplace log marginal likelihood with respect to
// (log signal_variance, log length_scale), evaluated at a converged mode.
Eigen::Vector2d log_marginal_gradient(const Eigen::MatrixXd& inputs, const KernelParams& params,
                                      const LaplaceResult& laplace);

struct GpcModel {
  Eigen::MatrixXd inputs;   // normalized training inputs
  Eigen::VectorXd targets;  // +1 / -1
  KernelParams kernel;
  NormalizationParams normalizer;
  Eigen::VectorXd mode;
  Eigen::VectorXd alpha;
  // Rebuilt from `mode` by rebuild_cache(); not persisted.
  Eigen::VectorXd sqrt_w;
  Eigen::MatrixXd chol_lower;
  double log_marginal = 0.0;
  std::uint64_t seed = 0;
  std::optional<ClassLabel> constant;

  std::size_t input_size() const { return normalizer.size(); }
  void rebuild_cache();
};

struct GpcTrainOptions {
  KernelParams kernel{};
  bool optimize_hyperparams = false;
  std::size_t size_cap = 3000;
  std::uint64_t seed = 0;
  CgConfig cg{100, 1e-5, 0};
  LineSearchConfig ls{};
  LaplaceOptions laplace{};
};

struct GpcTraining {
  GpcModel model;
  std::vector<double> objective_trace;  // negative log marginal per CG step
};

// Throws PartitionTooLarge above options.size_cap rows.
GpcTraining gpc_train(const Eigen::MatrixXd& raw_features, std::span<const ClassLabel> targets,
                      const GpcTrainOptions& options);
GpcModel gpc_train(const DataTable& data, const GpcTrainOptions& options);

struct LatentPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

LatentPrediction gpc_latent(const GpcModel& model, const Eigen::VectorXd& raw_x);

// E[sigma(f)] for f ~ N(mean, variance) by 20-node Gauss-Hermite quadrature.
double expected_logistic(double mean, double variance);

// Nodes ascending, exactly antisymmetric; weights sum to one.
const std::array<std::pair<double, double>, 20>& gauss_hermite_rule();

double gpc_predict_prob(const GpcModel& model, const Eigen::VectorXd& raw_x);

// +1 iff probability > 0.5.
ClassLabel threshold_probability(double p);
ClassLabel gpc_classify(const GpcModel& model, const Eigen::VectorXd& raw_x);

}  // namespace gkmnc
