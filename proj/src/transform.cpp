#include "ptfh/transform.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptfh {

namespace {

// exp(709.79) is the last finite double; stay a hair below.
constexpr double kMaxExpArg = 709.0;

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::domain_error("transform: lambda must be finite and >= 0, got " +
                            std::to_string(lambda));
  }
}

void check_positive(double x, const char* who) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(who) +
                            ": argument must be positive and finite, got " +
                            std::to_string(x));
  }
}

}  // namespace

double dpt(double x, double lambda) {
  check_positive(x, "dpt");
  check_lambda(lambda);
  const double lx = std::log(x);
  if (lambda < kLambdaEps) return lx;
  const double v = std::sinh(lambda * lx) / lambda;
  if (!std::isfinite(v)) {
    throw std::range_error("dpt: value overflows double range at x=" +
                           std::to_string(x) + ", lambda=" + std::to_string(lambda));
  }
  return v;
}

double dpt_inv(double t, double lambda) {
  if (!std::isfinite(t)) {
    throw std::domain_error("dpt_inv: argument must be finite");
  }
  check_lambda(lambda);
  const double e = (lambda < kLambdaEps) ? t : std::asinh(lambda * t) / lambda;
  if (!(e <= kMaxExpArg)) {  // also catches NaN from asinh(inf*0) corner
    throw std::range_error("dpt_inv: result overflows double range at t=" +
                           std::to_string(t) + ", lambda=" + std::to_string(lambda));
  }
  const double v = std::exp(e);
  if (v <= 0.0) {
    throw std::range_error("dpt_inv: result underflows to zero at t=" +
                           std::to_string(t) + ", lambda=" + std::to_string(lambda));
  }
  return v;
}

double dpt_deriv(double x, double lambda) {
  check_positive(x, "dpt_deriv");
  check_lambda(lambda);
  return 0.5 * std::exp(log_jacobian_term(x, lambda));
}

double log_jacobian_term(double y, double lambda) {
  check_positive(y, "log_jacobian_term");
  check_lambda(lambda);
  const double u = std::log(y);
  const double a = (lambda - 1.0) * u;
  const double b = -(lambda + 1.0) * u;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace ptfh
