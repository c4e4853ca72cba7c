#include "gkmnc/optim.hpp"

#include <cmath>
#include <limits>

#include "gkmnc/error.hpp"

namespace gkmnc {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

Interval bracket_minimum(const ScalarFunction& phi, const LineSearchConfig& config) {
  if (!(config.step > 0.0) || !(config.tolerance > 0.0))
    throw Error(ErrorCode::InvalidArgument, "line search step and tolerance must be positive");
  const double f0 = finite_or_inf(phi(0.0));
  double before = 0.0;
  double current = config.step;
  double f_current = finite_or_inf(phi(current));
  if (!(f_current < f0)) return {0.0, config.step};

  for (std::size_t expansion = 0; expansion < config.max_expansions; ++expansion) {
    const double next = 2.0 * current;
    const double f_next = finite_or_inf(phi(next));
    if (!(f_next < f_current)) return {before, next};
    before = current;
    current = next;
    f_current = f_next;
  }
  throw Error(ErrorCode::NoBracketFound,
              "function still decreasing after " + std::to_string(config.max_expansions) + " step doublings");
}

LineMinimum golden_section(const ScalarFunction& phi, Interval interval, double tolerance) {
  double a = interval.lower;
  double b = interval.upper;
  if (!(a < b)) throw Error(ErrorCode::InvalidInterval, "golden section needs lower < upper");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "golden section tolerance must be positive");

  LineMinimum out;
  double c = a + (1.0 - kInvPhi) * (b - a);
  double d = b - (1.0 - kInvPhi) * (b - a);
  double fc = finite_or_inf(phi(c));
  double fd = finite_or_inf(phi(d));
  out.evaluations = 2;
  while (b - a > tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = a + (1.0 - kInvPhi) * (b - a);
      fc = finite_or_inf(phi(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = b - (1.0 - kInvPhi) * (b - a);
      fd = finite_or_inf(phi(d));
    }
    ++out.evaluations;
    ++out.iterations;
  }
  if (fc < fd) {
    out.t = c;
    out.value = fc;
  } else {
    out.t = d;
    out.value = fd;
  }
  return out;
}

LineMinimum line_search(const Objective& objective, const Eigen::VectorXd& x, const Eigen::VectorXd& direction,
                        const LineSearchConfig& config) {
  const ScalarFunction phi = [&](double t) { return objective(x + t * direction); };
  return golden_section(phi, bracket_minimum(phi, config), config.tolerance);
}

std::string_view to_string(CgStop stop) {
  switch (stop) {
    case CgStop::GradientTolerance: return "gradient_tolerance";
    case CgStop::MaxIterations: return "max_iterations";
    case CgStop::NoProgress: return "no_progress";
  }
  return "unknown";
}

CgResult conjugate_gradient(const Objective& objective, const Gradient& gradient, Eigen::VectorXd x0,
                            const CgConfig& cg, const LineSearchConfig& ls) {
  CgResult out;
  out.x = std::move(x0);
  double f = objective(out.x);
  out.trace.push_back(f);
  Eigen::VectorXd g = gradient(out.x);
  Eigen::VectorXd d = -g;
  bool steepest = true;
  const std::size_t period = cg.restart_period > 0 ? cg.restart_period : static_cast<std::size_t>(out.x.size());
  std::size_t since_restart = 0;

  const auto restart = [&] {
    d = -g;
    steepest = true;
    since_restart = 0;
  };

  for (;;) {
    if (g.norm() < cg.gradient_norm_tolerance) {
      out.stop = CgStop::GradientTolerance;
      return out;
    }
    if (out.iterations >= cg.max_iterations) {
      out.stop = CgStop::MaxIterations;
      return out;
    }
    ++out.iterations;
    if (g.dot(d) >= 0.0) restart();

    LineMinimum step;
    bool improved = false;
    try {
      step = line_search(objective, out.x, d, ls);
      improved = step.value < f;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoBracketFound) throw;
    }
    if (!improved) {
      if (steepest) {
        out.stop = CgStop::NoProgress;
        return out;
      }
      restart();
      continue;
    }

    out.x += step.t * d;
    f = step.value;
    out.trace.push_back(f);
    const Eigen::VectorXd g_next = gradient(out.x);
    if (++since_restart >= period) {
      g = g_next;
      restart();
      continue;
    }
    const double beta = g_next.squaredNorm() / g.squaredNorm();
    d = -g_next + beta * d;
    g = g_next;
    steepest = false;
  }
}

Eigen::VectorXd finite_difference_gradient(const Objective& objective, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = objective(probe);
    probe[i] = x[i] - h;
    const double down = objective(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace gkmnc
