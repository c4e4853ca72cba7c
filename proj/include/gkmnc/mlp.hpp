#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gkmnc/dataset.hpp"
#include "gkmnc/optim.hpp"

namespace gkmnc {

// x-y-1 perceptron with logistic hidden and output units.
//
// Flat parameter order (used by gradients and the model file):
//   hidden_weights row-major (hidden unit j, then input i), hidden_bias,
//   output_weights, output_bias.
struct MlpModel {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Eigen::MatrixXd hidden_weights;  // hidden x input
  Eigen::VectorXd hidden_bias;
  Eigen::VectorXd output_weights;  // hidden
  double output_bias = 0.0;
  NormalizationParams normalizer;
  std::uint64_t seed = 0;
  // Set when the training partition held a single class.
  std::optional<ClassLabel> constant;

  std::string architecture() const;
  std::size_t parameter_count() const { return hidden_size * (input_size + 2) + 1; }
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
};

double logistic(double z);

// Weights drawn uniformly from [-0.5, 0.5].
MlpModel make_mlp(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed);

// Output for an already-normalized input.
double mlp_forward(const MlpModel& model, const Eigen::VectorXd& x);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

// Mean squared error against 0/1 targets, with the backpropagated gradient
// in flat parameter order. `features` are normalized, one row per example.
LossAndGradient mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets);

Eigen::VectorXd to_unit_targets(std::span<const ClassLabel> labels);

struct MlpTrainOptions {
  std::size_t hidden_size = 3;
  std::uint64_t seed = 0;
  CgConfig cg{};
  LineSearchConfig ls{};
};

struct MlpTraining {
  MlpModel model;
  std::vector<double> loss_trace;
  std::size_t iterations = 0;
  CgStop stop = CgStop::GradientTolerance;
};

// Fits the normalizer on `raw_features`, then trains by conjugate gradient.
MlpTraining mlp_train(const Eigen::MatrixXd& raw_features, std::span<const ClassLabel> targets,
                      const MlpTrainOptions& options);
MlpModel mlp_train(const DataTable& data, const MlpTrainOptions& options);

// Output for a raw (unnormalized) feature vector; constant models return
// 1 or 0.
double mlp_output(const MlpModel& model, const Eigen::VectorXd& raw_x);

// +1 iff output > 0.5.
ClassLabel threshold_output(double output);
ClassLabel mlp_classify(const MlpModel& model, const Eigen::VectorXd& raw_x);

struct HiddenSizeSearch {
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, double>> accuracy;  // (hidden size, validation accuracy)
};

// Highest accuracy wins; ties go to the smaller size.
std::size_t pick_hidden_size(std::span<const std::pair<std::size_t, double>> accuracy);

HiddenSizeSearch search_hidden_size(const DataTable& train, const DataTable& validation,
                                    std::span<const std::size_t> candidates, std::uint64_t seed,
                                    const CgConfig& cg = {}, const LineSearchConfig& ls = {});

}  // namespace gkmnc
