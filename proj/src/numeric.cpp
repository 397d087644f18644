#include "ptfh/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ptfh {

namespace {

double pairwise_sum_impl(const double* p, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(p, half) + pairwise_sum_impl(p + half, n - half);
}

constexpr double kInvGolden = 0.6180339887498949;  // 1/phi

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_impl(values.data(), values.size());
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
  const double m = mean(values);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

MaximizeResult maximize_on_grid(const std::function<double(double)>& f,
                                std::span<const double> grid, double tol) {
  if (grid.size() < 1) throw std::invalid_argument("maximize_on_grid: empty grid");
  MaximizeResult res;
  auto eval = [&](double x) {
    const double v = f(x);
    res.trace.emplace_back(x, v);
    ++res.evaluations;
    return v;
  };

  std::size_t best = 0;
  double best_val = eval(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = eval(grid[i]);
    if (v > best_val) {  // strict: ties keep the smaller x
      best_val = v;
      best = i;
    }
  }
  res.x = grid[best];
  res.fx = best_val;

  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[best + 1 < grid.size() ? best + 1 : best];
  if (b - a > tol) {
    double x1 = b - kInvGolden * (b - a);
    double x2 = a + kInvGolden * (b - a);
    double f1 = eval(x1);
    double f2 = eval(x2);
    while (b - a > tol) {
      if (f1 >= f2) {  // tie toward the smaller x
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kInvGolden * (b - a);
        f1 = eval(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvGolden * (b - a);
        f2 = eval(x2);
      }
      if (res.evaluations > 500) break;  // tol below representable spacing
    }
    for (const auto& [x, v] : res.trace) {
      if (v > res.fx) {
        res.fx = v;
        res.x = x;
      }
    }
  }
  res.at_lower = res.x - grid.front() <= tol;
  res.at_upper = grid.back() - res.x <= tol;
  return res;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("linspace: n must be >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + step * i;
  g.back() = hi;
  return g;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile_sorted: q outside [0,1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[lo + 1] * w;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (threads == 0) threads = 1;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ptfh
