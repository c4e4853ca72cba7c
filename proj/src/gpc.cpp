#include "gkmnc/gpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gkmnc/error.hpp"

namespace gkmnc {

double logistic_link(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

namespace {

// log sigma(z) without cancellation.
double log_logistic(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

void check_params(const KernelParams& p) {
  if (!(p.signal_variance > 0.0) || !(p.length_scale > 0.0) || !(p.jitter >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "kernel parameters must be positive");
}

struct LikelihoodTerms {
  Eigen::VectorXd grad;  // d log p / df
  Eigen::VectorXd w;     // -d2 log p / df2
  double log_lik = 0.0;
};

// Written in terms of y_i f_i so that flipping every label and negating f
// reproduces the same numbers with flipped signs bit for bit.
LikelihoodTerms likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  LikelihoodTerms t;
  t.grad.resize(f.size());
  t.w.resize(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double z = y[i] * f[i];
    const double s_pos = logistic_link(z);
    const double s_neg = logistic_link(-z);
    t.grad[i] = y[i] * s_neg;
    t.w[i] = s_pos * s_neg;
    t.log_lik += log_logistic(z);
  }
  return t;
}

Eigen::MatrixXd factor_b(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& sqrt_w) {
  const auto n = kernel.rows();
  Eigen::MatrixXd b = sqrt_w.asDiagonal() * kernel * sqrt_w.asDiagonal();
  b.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::CholeskyFailure, "I + W^1/2 K W^1/2 is not positive definite; increase the jitter");
  Eigen::MatrixXd lower = llt.matrixL();
  (void)n;
  return lower;
}

double psi(const Eigen::VectorXd& a, const Eigen::VectorXd& f, double log_lik) { return -0.5 * a.dot(f) + log_lik; }

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const KernelParams& params) {
  check_params(params);
  const auto n = inputs.rows();
  const double scale = 1.0 / (2.0 * params.length_scale * params.length_scale);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.signal_variance + params.jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = params.signal_variance * std::exp(-squared_distance(inputs, i, inputs, j) * scale);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, const KernelParams& params) {
  check_params(params);
  if (left.cols() != right.cols())
    throw Error(ErrorCode::DimensionMismatch, "kernel inputs have " + std::to_string(left.cols()) + " and " +
                                                  std::to_string(right.cols()) + " features");
  const double scale = 1.0 / (2.0 * params.length_scale * params.length_scale);
  Eigen::MatrixXd k(left.rows(), right.rows());
  for (Eigen::Index i = 0; i < left.rows(); ++i)
    for (Eigen::Index j = 0; j < right.rows(); ++j)
      k(i, j) = params.signal_variance * std::exp(-squared_distance(left, i, right, j) * scale);
  return k;
}

Eigen::VectorXd to_sign_targets(std::span<const ClassLabel> labels) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = as_sign(labels[i]);
  return y;
}

LaplaceResult laplace_mode(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& targets,
                           const LaplaceOptions& options,
                           const std::pair<Eigen::VectorXd, Eigen::VectorXd>* warm_start) {
  const auto n = kernel.rows();
  if (kernel.cols() != n || targets.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "kernel and targets disagree in size");
  for (Eigen::Index i = 0; i < n; ++i)
    if (targets[i] != 1.0 && targets[i] != -1.0)
      throw Error(ErrorCode::InvalidArgument, "GPC targets must be +1 or -1");

  LaplaceResult out;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  if (warm_start && warm_start->first.size() == n && warm_start->second.size() == n) {
    a = warm_start->second;
    f = kernel * a;
  }
  auto terms = likelihood(targets, f);
  double current = psi(a, f, terms.log_lik);
  out.psi_trace.push_back(current);

  bool converged = false;
  while (out.iterations < options.max_iterations) {
    ++out.iterations;
    const Eigen::VectorXd sqrt_w = terms.w.cwiseSqrt();
    const Eigen::MatrixXd lower = factor_b(kernel, sqrt_w);
    const Eigen::VectorXd b = terms.w.cwiseProduct(f) + terms.grad;
    Eigen::VectorXd rhs = sqrt_w.cwiseProduct(kernel * b);
    lower.triangularView<Eigen::Lower>().solveInPlace(rhs);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
    Eigen::VectorXd a_next = b - sqrt_w.cwiseProduct(rhs);
    Eigen::VectorXd f_next = kernel * a_next;
    auto next_terms = likelihood(targets, f_next);
    double next = psi(a_next, f_next, next_terms.log_lik);

    // Newton on this concave objective rarely overshoots; halve the step if it does.
    for (int halving = 0; halving < 30 && next < current; ++halving) {
      a_next = 0.5 * (a + a_next);
      f_next = kernel * a_next;
      next_terms = likelihood(targets, f_next);
      next = psi(a_next, f_next, next_terms.log_lik);
    }
    const double change = next - current;
    const bool stalled = next < current;
    if (!stalled) {
      a = std::move(a_next);
      f = std::move(f_next);
      terms = std::move(next_terms);
      current = next;
      out.psi_trace.push_back(current);
    }
    const double residual = (f - kernel * terms.grad).cwiseAbs().maxCoeff();
    if (std::abs(change) < options.tolerance && residual < options.stationarity_tolerance) {
      converged = true;
      break;
    }
    if (stalled) break;  // no step improves psi at working precision
  }
  if (!converged)
    throw Error(ErrorCode::NonConvergence,
                "Laplace mode search did not converge after " + std::to_string(out.iterations) + " iterations");

  out.mode = f;
  out.alpha = terms.grad;
  out.newton_a = a;
  out.sqrt_w = terms.w.cwiseSqrt();
  out.chol_lower = factor_b(kernel, out.sqrt_w);
  out.log_marginal = current - out.chol_lower.diagonal().array().log().sum();
  return out;
}

Eigen::Vector2d log_marginal_gradient(const Eigen::MatrixXd& inputs, const KernelParams& params,
                                      const LaplaceResult& laplace) {
  const auto n = inputs.rows();
  const Eigen::MatrixXd kernel = kernel_matrix(inputs, params);
  const auto& lower = laplace.chol_lower;
  const auto& sw = laplace.sqrt_w;

  // R = W^1/2 B^-1 W^1/2
  Eigen::MatrixXd r = sw.asDiagonal().toDenseMatrix();
  lower.triangularView<Eigen::Lower>().solveInPlace(r);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(r);
  r = sw.asDiagonal() * r;

  // C = L^-1 W^1/2 K
  Eigen::MatrixXd c = sw.asDiagonal() * kernel;
  lower.triangularView<Eigen::Lower>().solveInPlace(c);

  // dW/df at the mode: pi (1 - pi) (1 - 2 pi), the negated third derivative of log p(y|f)
  Eigen::VectorXd dw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = logistic_link(laplace.mode[i]);
    const double q = logistic_link(-laplace.mode[i]);
    dw[i] = p * q * (q - p);
  }
  const Eigen::VectorXd s2 =
      -0.5 * (kernel.diagonal() - c.colwise().squaredNorm().transpose()).cwiseProduct(dw);

  // dK / d log(signal variance) and dK / d log(length scale), jitter excluded
  Eigen::MatrixXd d_signal = kernel;
  d_signal.diagonal().array() -= params.jitter;
  Eigen::MatrixXd d_length(n, n);
  const double inv_l2 = 1.0 / (params.length_scale * params.length_scale);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      d_length(i, j) = d_signal(i, j) * (inputs.row(i) - inputs.row(j)).squaredNorm() * inv_l2;

  Eigen::Vector2d grad;
  const Eigen::MatrixXd* derivatives[2] = {&d_signal, &d_length};
  for (int j = 0; j < 2; ++j) {
    const auto& dk = *derivatives[j];
    const double s1 = 0.5 * laplace.alpha.dot(dk * laplace.alpha) - 0.5 * r.cwiseProduct(dk).sum();
    const Eigen::VectorXd b = dk * laplace.alpha;
    const Eigen::VectorXd s3 = b - kernel * (r * b);
    grad[j] = s1 + s2.dot(s3);
  }
  return grad;
}

void GpcModel::rebuild_cache() {
  if (constant) return;
  const Eigen::MatrixXd k = kernel_matrix(inputs, kernel);
  sqrt_w = likelihood(targets, mode).w.cwiseSqrt();
  chol_lower = factor_b(k, sqrt_w);
}

GpcTraining gpc_train(const Eigen::MatrixXd& raw_features, std::span<const ClassLabel> targets,
                      const GpcTrainOptions& options) {
  if (raw_features.rows() == 0) throw Error(ErrorCode::EmptyData, "cannot train a GPC on zero rows");
  if (static_cast<std::size_t>(raw_features.rows()) != targets.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and targets differ in length");
  if (static_cast<std::size_t>(raw_features.rows()) > options.size_cap)
    throw Error(ErrorCode::PartitionTooLarge,
                "GPC partition has " + std::to_string(raw_features.rows()) + " rows, above the cap of " +
                    std::to_string(options.size_cap) + "; enable grouping/clustering to split it");

  GpcTraining out;
  auto& m = out.model;
  m.kernel = options.kernel;
  m.seed = options.seed;
  m.normalizer = fit_normalizer(raw_features);
  bool single_class = true;
  for (auto t : targets) single_class = single_class && t == targets.front();
  if (single_class) {
    m.constant = targets.front();
    return out;
  }
  m.inputs = apply_normalizer(m.normalizer, raw_features);
  m.targets = to_sign_targets(targets);

  if (options.optimize_hyperparams) {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> warm;
    const auto params_at = [&](const Eigen::VectorXd& theta) {
      KernelParams p = options.kernel;
      p.signal_variance = std::exp(theta[0]);
      p.length_scale = std::exp(theta[1]);
      return p;
    };
    const auto solve = [&](const Eigen::VectorXd& theta) -> std::optional<LaplaceResult> {
      if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 20.0) return std::nullopt;
      try {
        const auto p = params_at(theta);
        auto result = laplace_mode(kernel_matrix(m.inputs, p), m.targets, options.laplace,
                                   warm.first.size() ? &warm : nullptr);
        warm = {result.mode, result.newton_a};
        return result;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CholeskyFailure && e.code() != ErrorCode::NonConvergence) throw;
        return std::nullopt;
      }
    };
    const Objective objective = [&](const Eigen::VectorXd& theta) {
      const auto r = solve(theta);
      return r ? -r->log_marginal : std::numeric_limits<double>::infinity();
    };
    const Gradient gradient = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
      const auto r = solve(theta);
      if (!r) return Eigen::Vector2d::Zero();
      return -log_marginal_gradient(m.inputs, params_at(theta), *r);
    };
    Eigen::VectorXd theta0(2);
    theta0 << std::log(options.kernel.signal_variance), std::log(options.kernel.length_scale);
    auto result = conjugate_gradient(objective, gradient, theta0, options.cg, options.ls);
    m.kernel = params_at(result.x);
    out.objective_trace = std::move(result.trace);
  }

  const auto laplace = laplace_mode(kernel_matrix(m.inputs, m.kernel), m.targets, options.laplace);
  m.mode = laplace.mode;
  m.alpha = laplace.alpha;
  m.sqrt_w = laplace.sqrt_w;
  m.chol_lower = laplace.chol_lower;
  m.log_marginal = laplace.log_marginal;
  return out;
}

GpcModel gpc_train(const DataTable& data, const GpcTrainOptions& options) {
  const auto targets = data.targets();
  return gpc_train(data.numeric_matrix(), targets, options).model;
}

LatentPrediction gpc_latent(const GpcModel& model, const Eigen::VectorXd& raw_x) {
  if (static_cast<std::size_t>(raw_x.size()) != model.input_size())
    throw Error(ErrorCode::DimensionMismatch, "GPC expects " + std::to_string(model.input_size()) +
                                                  " inputs, got " + std::to_string(raw_x.size()));
  if (model.constant) return {};
  const Eigen::VectorXd x = apply_normalizer(model.normalizer, raw_x);
  const Eigen::VectorXd k_star = kernel_matrix(model.inputs, x.transpose(), model.kernel).col(0);
  LatentPrediction out;
  out.mean = k_star.dot(model.alpha);
  Eigen::VectorXd v = model.sqrt_w.cwiseProduct(k_star);
  model.chol_lower.triangularView<Eigen::Lower>().solveInPlace(v);
  out.variance = std::max(0.0, model.kernel.signal_variance - v.squaredNorm());
  return out;
}

const std::array<std::pair<double, double>, 20>& gauss_hermite_rule() {
  static const auto rule = [] {
    constexpr int n = 20;
    // Golub-Welsch: eigen-decomposition of the Hermite Jacobi matrix.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    std::array<std::pair<double, double>, n> raw{};
    for (int i = 0; i < n; ++i) {
      const double v0 = eig.eigenvectors()(0, i);
      raw[static_cast<std::size_t>(i)] = {eig.eigenvalues()[i], v0 * v0};
    }
    std::sort(raw.begin(), raw.end());
    std::array<std::pair<double, double>, n> rule{};
    double total = 0.0;
    for (int i = 0; i < n / 2; ++i) {
      const auto lo = raw[static_cast<std::size_t>(i)];
      const auto hi = raw[static_cast<std::size_t>(n - 1 - i)];
      const double node = 0.5 * (hi.first - lo.first);
      const double weight = 0.5 * (hi.second + lo.second);
      rule[static_cast<std::size_t>(i)] = {-node, weight};
      rule[static_cast<std::size_t>(n - 1 - i)] = {node, weight};
      total += 2.0 * weight;
    }
    for (auto& r : rule) r.second /= total;
    return rule;
  }();
  return rule;
}

double expected_logistic(double mean, double variance) {
  if (variance <= 0.0) return logistic_link(mean);
  // sigma(z) - 1/2 = tanh(z/2)/2; summing node pairs keeps the result exactly
  // antisymmetric in the mean.
  const double spread = std::sqrt(2.0 * variance);
  const auto& rule = gauss_hermite_rule();
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size() / 2; ++i) {
    const auto& [node, weight] = rule[rule.size() - 1 - i];
    sum += weight * (std::tanh(0.5 * (mean + spread * node)) + std::tanh(0.5 * (mean - spread * node)));
  }
  return 0.5 + 0.5 * sum;
}

double gpc_predict_prob(const GpcModel& model, const Eigen::VectorXd& raw_x) {
  if (model.constant) {
    if (static_cast<std::size_t>(raw_x.size()) != model.input_size())
      throw Error(ErrorCode::DimensionMismatch, "GPC expects " + std::to_string(model.input_size()) + " inputs");
    return *model.constant == ClassLabel::Positive ? 1.0 : 0.0;
  }
  const auto latent = gpc_latent(model, raw_x);
  return expected_logistic(latent.mean, latent.variance);
}

ClassLabel threshold_probability(double p) { return p > 0.5 ? ClassLabel::Positive : ClassLabel::Negative; }

ClassLabel gpc_classify(const GpcModel& model, const Eigen::VectorXd& raw_x) {
  return threshold_probability(gpc_predict_prob(model, raw_x));
}

}  // namespace gkmnc
