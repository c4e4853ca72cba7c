#include "gkmnc/mlp.hpp"

#include <cmath>
#include <random>

#include "gkmnc/error.hpp"

namespace gkmnc {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string MlpModel::architecture() const {
  return std::to_string(input_size) + "-" + std::to_string(hidden_size) + "-1";
}

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < hidden_weights.rows(); ++j)
    for (Eigen::Index i = 0; i < hidden_weights.cols(); ++i) flat[p++] = hidden_weights(j, i);
  for (Eigen::Index j = 0; j < hidden_bias.size(); ++j) flat[p++] = hidden_bias[j];
  for (Eigen::Index j = 0; j < output_weights.size(); ++j) flat[p++] = output_weights[j];
  flat[p] = output_bias;
  return flat;
}

void MlpModel::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(parameter_count()) + " MLP parameters");
  const auto h = static_cast<Eigen::Index>(hidden_size);
  const auto d = static_cast<Eigen::Index>(input_size);
  hidden_weights.resize(h, d);
  hidden_bias.resize(h);
  output_weights.resize(h);
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < h; ++j)
    for (Eigen::Index i = 0; i < d; ++i) hidden_weights(j, i) = flat[p++];
  for (Eigen::Index j = 0; j < h; ++j) hidden_bias[j] = flat[p++];
  for (Eigen::Index j = 0; j < h; ++j) output_weights[j] = flat[p++];
  output_bias = flat[p];
}

MlpModel make_mlp(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed) {
  if (input_size == 0 || hidden_size == 0)
    throw Error(ErrorCode::InvalidArgument, "MLP layer sizes must be positive");
  MlpModel m;
  m.input_size = input_size;
  m.hidden_size = hidden_size;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  Eigen::VectorXd flat(static_cast<Eigen::Index>(m.parameter_count()));
  for (Eigen::Index p = 0; p < flat.size(); ++p) flat[p] = init(rng);
  m.set_parameters(flat);
  m.normalizer.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_size));
  m.normalizer.stddev = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(input_size));
  return m;
}

double mlp_forward(const MlpModel& model, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_size)
    throw Error(ErrorCode::DimensionMismatch, "MLP expects " + std::to_string(model.input_size) + " inputs, got " +
                                                  std::to_string(x.size()));
  Eigen::VectorXd hidden = model.hidden_weights * x + model.hidden_bias;
  for (Eigen::Index j = 0; j < hidden.size(); ++j) hidden[j] = logistic(hidden[j]);
  return logistic(model.output_weights.dot(hidden) + model.output_bias);
}

LossAndGradient mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets) {
  if (features.rows() == 0) throw Error(ErrorCode::EmptyData, "no rows to evaluate the MLP loss on");
  if (static_cast<std::size_t>(features.cols()) != model.input_size || targets.size() != features.rows())
    throw Error(ErrorCode::DimensionMismatch, "MLP loss inputs do not match the model");
  const double n = static_cast<double>(features.rows());

  Eigen::MatrixXd hidden = (features * model.hidden_weights.transpose()).rowwise() + model.hidden_bias.transpose();
  hidden = hidden.unaryExpr([](double z) { return logistic(z); });
  Eigen::VectorXd output = (hidden * model.output_weights).array() + model.output_bias;
  output = output.unaryExpr([](double z) { return logistic(z); });

  const Eigen::VectorXd error = output - targets;
  LossAndGradient out;
  out.loss = error.squaredNorm() / n;

  // d loss / d output pre-activation
  const Eigen::VectorXd delta_out = (2.0 / n) * error.array() * output.array() * (1.0 - output.array());
  // d loss / d hidden pre-activation
  const Eigen::MatrixXd delta_hidden =
      (delta_out * model.output_weights.transpose()).array() * hidden.array() * (1.0 - hidden.array());

  const Eigen::MatrixXd grad_hidden_weights = delta_hidden.transpose() * features;
  const Eigen::VectorXd grad_hidden_bias = delta_hidden.colwise().sum().transpose();
  const Eigen::VectorXd grad_output_weights = hidden.transpose() * delta_out;
  const double grad_output_bias = delta_out.sum();

  out.gradient.resize(static_cast<Eigen::Index>(model.parameter_count()));
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < grad_hidden_weights.rows(); ++j)
    for (Eigen::Index i = 0; i < grad_hidden_weights.cols(); ++i) out.gradient[p++] = grad_hidden_weights(j, i);
  for (Eigen::Index j = 0; j < grad_hidden_bias.size(); ++j) out.gradient[p++] = grad_hidden_bias[j];
  for (Eigen::Index j = 0; j < grad_output_weights.size(); ++j) out.gradient[p++] = grad_output_weights[j];
  out.gradient[p] = grad_output_bias;
  return out;
}

Eigen::VectorXd to_unit_targets(std::span<const ClassLabel> labels) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    t[static_cast<Eigen::Index>(i)] = labels[i] == ClassLabel::Positive ? 1.0 : 0.0;
  return t;
}

MlpTraining mlp_train(const Eigen::MatrixXd& raw_features, std::span<const ClassLabel> targets,
                      const MlpTrainOptions& options) {
  if (raw_features.rows() == 0) throw Error(ErrorCode::EmptyData, "cannot train an MLP on zero rows");
  if (static_cast<std::size_t>(raw_features.rows()) != targets.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and targets differ in length");

  MlpTraining out;
  out.model = make_mlp(static_cast<std::size_t>(raw_features.cols()), options.hidden_size, options.seed);
  out.model.normalizer = fit_normalizer(raw_features);

  bool single_class = true;
  for (auto t : targets) single_class = single_class && t == targets.front();
  if (single_class) {
    out.model.constant = targets.front();
    return out;
  }

  const Eigen::MatrixXd features = apply_normalizer(out.model.normalizer, raw_features);
  const Eigen::VectorXd unit = to_unit_targets(targets);
  MlpModel scratch = out.model;
  const Objective loss = [&](const Eigen::VectorXd& w) {
    scratch.set_parameters(w);
    return mlp_loss_and_gradient(scratch, features, unit).loss;
  };
  const Gradient gradient = [&](const Eigen::VectorXd& w) {
    scratch.set_parameters(w);
    return mlp_loss_and_gradient(scratch, features, unit).gradient;
  };
  auto result = conjugate_gradient(loss, gradient, out.model.parameters(), options.cg, options.ls);
  out.model.set_parameters(result.x);
  out.loss_trace = std::move(result.trace);
  out.iterations = result.iterations;
  out.stop = result.stop;
  return out;
}

MlpModel mlp_train(const DataTable& data, const MlpTrainOptions& options) {
  const auto targets = data.targets();
  return mlp_train(data.numeric_matrix(), targets, options).model;
}

double mlp_output(const MlpModel& model, const Eigen::VectorXd& raw_x) {
  if (static_cast<std::size_t>(raw_x.size()) != model.input_size)
    throw Error(ErrorCode::DimensionMismatch, "MLP expects " + std::to_string(model.input_size) + " inputs, got " +
                                                  std::to_string(raw_x.size()));
  if (model.constant) return *model.constant == ClassLabel::Positive ? 1.0 : 0.0;
  return mlp_forward(model, apply_normalizer(model.normalizer, raw_x));
}

ClassLabel threshold_output(double output) { return output > 0.5 ? ClassLabel::Positive : ClassLabel::Negative; }

ClassLabel mlp_classify(const MlpModel& model, const Eigen::VectorXd& raw_x) {
  return threshold_output(mlp_output(model, raw_x));
}

std::size_t pick_hidden_size(std::span<const std::pair<std::size_t, double>> accuracy) {
  if (accuracy.empty()) throw Error(ErrorCode::InvalidArgument, "no hidden-size candidates");
  auto best = accuracy.front();
  for (const auto& entry : accuracy) {
    if (entry.second > best.second || (entry.second == best.second && entry.first < best.first)) best = entry;
  }
  return best.first;
}

HiddenSizeSearch search_hidden_size(const DataTable& train, const DataTable& validation,
                                    std::span<const std::size_t> candidates, std::uint64_t seed, const CgConfig& cg,
                                    const LineSearchConfig& ls) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no hidden-size candidates");
  if (validation.empty()) throw Error(ErrorCode::EmptyValidation, "hidden-size search needs validation rows");
  const auto truth = validation.targets();
  HiddenSizeSearch out;
  for (auto size : candidates) {
    const auto model = mlp_train(train, MlpTrainOptions{size, seed, cg, ls});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < validation.size(); ++i)
      correct += mlp_classify(model, validation[i].numeric_vector()) == truth[i] ? 1 : 0;
    out.accuracy.emplace_back(size, static_cast<double>(correct) / static_cast<double>(validation.size()));
  }
  out.best = pick_hidden_size(out.accuracy);
  return out;
}

}  // namespace gkmnc
