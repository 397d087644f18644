// Gauss-Hermite quadrature rules (weight exp(-u^2)) via eigen decomposition
// of the symmetric tridiagonal Jacobi matrix. Rules are cached per order;
// the cache is safe for concurrent readers.
#ifndef PTFH_GAUSS_HERMITE_HPP
#define PTFH_GAUSS_HERMITE_HPP

#include <vector>

namespace ptfh {

struct QuadRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // sum = sqrt(pi)
};

// Returns the cached rule of the given order (>= 1), computing it on first use.
const QuadRule& gauss_hermite(int order);

}  // namespace ptfh

#endif
