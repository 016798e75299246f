#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blackstock::detail {

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Gauss-Legendre nodes and weights on [-1,1], Newton on the recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 60; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15 * (1.0 + std::abs(t))) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    double wi = 2.0 / ((1.0 - t * t) * dp * dp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

// Fixed-order GL approximation of integral of f over [a,b].
template <class F>
auto gl_integrate(F&& f, double a, double b, const std::vector<double>& x,
                  const std::vector<double>& w) {
  using R = decltype(f(a));
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  R acc = R{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += R(w[i] * h) * f(c + h * x[i]);
  return acc;
}

struct gl_rule {
  std::vector<double> x, w;
  explicit gl_rule(int n) { gauss_legendre(n, x, w); }
};

inline const gl_rule& gl_cached(int n) {
  static const gl_rule r7(7), r15(15);
  if (n == 7) return r7;
  if (n == 15) return r15;
  throw std::invalid_argument("gl_cached: only 7 and 15 are cached");
}

// Adaptive quadrature: GL15 vs GL7 error estimate, interval bisection.
// Absolute tolerance; the budget splits across subintervals.
template <class F>
auto adaptive_quad(F&& f, double a, double b, double abs_tol, int max_depth = 48) {
  using R = decltype(f(a));
  const auto& [x7, w7] = gl_cached(7);
  const auto& [x15, w15] = gl_cached(15);
  struct seg {
    double a, b, tol;
    int depth;
  };
  std::vector<seg> stack{{a, b, abs_tol, 0}};
  R total = R{};
  while (!stack.empty()) {
    seg s = stack.back();
    stack.pop_back();
    R i7 = gl_integrate(f, s.a, s.b, x7, w7);
    R i15 = gl_integrate(f, s.a, s.b, x15, w15);
    double err = std::abs(i15 - i7);
    if (err <= s.tol || s.depth >= max_depth) {
      total += i15;
      continue;
    }
    double m = 0.5 * (s.a + s.b);
    stack.push_back({s.a, m, 0.5 * s.tol, s.depth + 1});
    stack.push_back({m, s.b, 0.5 * s.tol, s.depth + 1});
  }
  return total;
}

}  // namespace blackstock::detail
