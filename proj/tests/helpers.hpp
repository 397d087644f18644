// Shared test utilities: an independent data generator for recovery checks
// and a standard normal quantile (bisection on the CDF, test-only).
#ifndef PTFH_TESTS_HELPERS_HPP
#define PTFH_TESTS_HELPERS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "ptfh/estimation.hpp"
#include "ptfh/numeric.hpp"
#include "ptfh/rng.hpp"
#include "ptfh/transform.hpp"

namespace ptfh_tests {

struct DgpDraw {
  std::vector<ptfh::AreaRecord> records;
  std::vector<double> true_d;
  std::vector<double> truth_mu;
};

// Linear model on the transformed scale with grouped variances, intercept
// plus one uniform covariate fixed per seed. known_d attaches the true D,
// otherwise n_aux replicates are attached.
inline DgpDraw make_dgp_records(int m, double lambda, double beta0, double beta1,
                                double A, const std::vector<double>& d_groups,
                                std::uint64_t seed, int rep, bool known_d,
                                int n_aux = 10) {
  DgpDraw out;
  const int per_group = m / static_cast<int>(d_groups.size());
  ptfh::RngStream x_stream(seed, ptfh::rng_tag::kCovariates, 0, 0);
  std::vector<double> xs(static_cast<std::size_t>(m));
  for (double& x : xs) x = x_stream.uniform(0.0, 4.0);

  ptfh::RngStream v_stream(seed, ptfh::rng_tag::kEffects,
                           static_cast<std::uint64_t>(rep), 0);
  ptfh::RngStream e_stream(seed, ptfh::rng_tag::kSampling,
                           static_cast<std::uint64_t>(rep), 0);
  out.records.resize(static_cast<std::size_t>(m));
  out.true_d.resize(static_cast<std::size_t>(m));
  out.truth_mu.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double d = d_groups[static_cast<std::size_t>(i / per_group)];
    out.true_d[k] = d;
    ptfh::AreaRecord& r = out.records[k];
    r.area_id = "a" + std::to_string(i);
    r.x = {1.0, xs[k]};
    const double eta = beta0 + beta1 * xs[k];
    const double v = v_stream.normal(0.0, std::sqrt(A));
    const double eps = e_stream.normal(0.0, std::sqrt(d));
    out.truth_mu[k] = ptfh::dpt_inv(eta + v, lambda);
    r.y = ptfh::dpt_inv(eta + v + eps, lambda);
    if (known_d) {
      r.D = d;
    } else {
      ptfh::RngStream z_stream(seed, ptfh::rng_tag::kAux,
                               static_cast<std::uint64_t>(rep),
                               static_cast<std::uint64_t>(i));
      r.replicates.resize(static_cast<std::size_t>(n_aux));
      for (int a = 0; a < n_aux; ++a) {
        r.replicates[static_cast<std::size_t>(a)] =
            ptfh::dpt_inv(z_stream.normal(0.0, std::sqrt(d)), lambda);
      }
    }
  }
  return out;
}

inline double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ptfh::norm_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace ptfh_tests

#endif
