// Dual power transformation h_lambda(x) = (x^lambda - x^-lambda) / (2 lambda),
// its inverse and Jacobian term. The hyperbolic forms
//   h_lambda(x)      = sinh(lambda log x) / lambda
//   h_lambda^{-1}(t) = exp(asinh(lambda t) / lambda)
// are algebraically identical to the power expressions but do not overflow for
// moderate |lambda t| and stay accurate as lambda -> 0.
#ifndef PTFH_TRANSFORM_HPP
#define PTFH_TRANSFORM_HPP

namespace ptfh {

// Below this the transformation is evaluated as the log case. The relative gap
// between the two branches at the switch point is ~ (lambda log x)^2 / 6,
// under unit roundoff amplification for the domains handled here.
inline constexpr double kLambdaEps = 1e-8;

// h_lambda(x). Throws std::domain_error for x <= 0, non-finite x, or
// lambda < 0; std::range_error if the true value exceeds double range.
double dpt(double x, double lambda);

// h_lambda^{-1}(t). Output is strictly positive. Throws std::range_error when
// the result over- or underflows the representable positive range.
double dpt_inv(double t, double lambda);

// d/dx h_lambda(x) = (x^{lambda-1} + x^{-lambda-1}) / 2.
double dpt_deriv(double x, double lambda);

// log(y^{lambda-1} + y^{-lambda-1}), one area's Jacobian summand, evaluated in
// log-sum-exp form. The likelihood multiplies the sum of these by 2.
double log_jacobian_term(double y, double lambda);

}  // namespace ptfh

#endif
