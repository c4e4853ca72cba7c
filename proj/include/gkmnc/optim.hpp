#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gkmnc {

using ScalarFunction = std::function<double(double)>;
using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LineSearchConfig {
  double step = 0.01;       // first bracketing step
  double tolerance = 0.01;  // final golden-section interval width
  std::size_t max_expansions = 60;
};

struct CgConfig {
  std::size_t max_iterations = 500;
  double gradient_norm_tolerance = 1e-5;
  std::size_t restart_period = 0;  // 0 = parameter dimension
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Evaluates phi at 0, step, 2 step, 4 step, ... until the value stops
// decreasing, then returns the two-step window around the last descent
// point. Non-finite values count as an increase.
Interval bracket_minimum(const ScalarFunction& phi, const LineSearchConfig& config = {});

struct LineMinimum {
  double t = 0.0;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

// Golden-section search; stops once the interval is no wider than
// `tolerance` and returns the best evaluated point inside it.
LineMinimum golden_section(const ScalarFunction& phi, Interval interval, double tolerance);

// Bracket then golden-section along x + t d.
LineMinimum line_search(const Objective& objective, const Eigen::VectorXd& x, const Eigen::VectorXd& direction,
                        const LineSearchConfig& config);

enum class CgStop { GradientTolerance, MaxIterations, NoProgress };

std::string_view to_string(CgStop stop);

struct CgResult {
  Eigen::VectorXd x;
  std::vector<double> trace;  // objective at x0 then after each accepted step
  std::size_t iterations = 0;
  CgStop stop = CgStop::MaxIterations;
};

// Fletcher-Reeves conjugate gradient with a restart to steepest descent
// every `restart_period` iterations, and whenever the direction stops being
// a descent direction or the line search fails to improve.
CgResult conjugate_gradient(const Objective& objective, const Gradient& gradient, Eigen::VectorXd x0,
                            const CgConfig& cg = {}, const LineSearchConfig& ls = {});

Eigen::VectorXd finite_difference_gradient(const Objective& objective, const Eigen::VectorXd& x, double h = 1e-5);

}  // namespace gkmnc
