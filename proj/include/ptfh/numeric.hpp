// Shared numerical utilities: deterministic summation, derivative-free 1-D
// maximization, a static-partition parallel loop, quantiles, normal CDF.
#ifndef PTFH_NUMERIC_HPP
#define PTFH_NUMERIC_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ptfh {

// Pairwise (cascade) summation over a fixed index order. The result depends
// only on the contents of the span, never on thread schedule.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Sample variance with divisor n-1.
double sample_variance(std::span<const double> values);

struct MaximizeResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  bool at_lower = false;
  bool at_upper = false;
  // Every (x, f(x)) pair evaluated, in evaluation order.
  std::vector<std::pair<double, double>> trace;
};

// Evaluates f on the grid (ascending, ties broken toward the smallest x),
// then refines by golden-section inside the bracket around the best grid
// point until the bracket width falls below tol. Returns the best point that
// was actually evaluated, so result.fx >= every trace entry.
MaximizeResult maximize_on_grid(const std::function<double(double)>& f,
                                std::span<const double> grid, double tol);

std::vector<double> linspace(double lo, double hi, int n);

// Type-7 (linear interpolation) quantile of an already sorted sequence.
double quantile_sorted(std::span<const double> sorted, double q);

double norm_cdf(double x);

// Runs body(i) for i in [0, n) on up to `threads` workers with a static
// chunked partition. body must only touch state owned by index i.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace ptfh

#endif
