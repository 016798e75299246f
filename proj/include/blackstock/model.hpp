#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "detail/dd.hpp"

namespace blackstock {

using cplx = std::complex<double>;

// Physical and derived constants after the c0 rescaling. delta and
// gamma_tilde are recomputed on demand so they can never drift out of sync
// with the stored inputs.
struct ModelParams {
  double kappa = 0.01;
  double b = 4.0 / 3.0;
  double nu = 1.0;
  double gamma = 1.4;
  double c0 = 1.0;
  bool inviscid = false;
  std::vector<std::string> warnings;

  double bnu() const { return inviscid ? 0.0 : b * nu; }
  double delta() const { return bnu() + (gamma - 1.0) * kappa; }
  double gamma_tilde() const { return gamma * bnu() * kappa; }
  double prandtl() const { return nu / kappa; }
};

inline ModelParams derive_params(double kappa, double b, double nu, double gamma,
                                 double c0, bool inviscid,
                                 double warn_threshold = 0.1) {
  auto reject = [](const char* field, const char* range) {
    throw std::invalid_argument(std::string("parameter ") + field +
                                " out of range; admissible interval " + range);
  };
  if (!(gamma > 1.0 && gamma <= 5.0 / 3.0)) reject("gamma", "(1, 5/3]");
  if (!(b > 0.0)) reject("b", "(0, inf)");
  if (!(nu > 0.0)) reject("nu", "(0, inf)");
  if (!(c0 > 0.0)) reject("c0", "(0, inf)");
  if (!(kappa > 0.0)) reject("kappa", "(0, inf)");
  ModelParams p;
  p.kappa = kappa;
  p.b = b;
  p.nu = nu;
  p.gamma = gamma;
  p.c0 = c0;
  p.inviscid = inviscid;
  if (kappa > warn_threshold)
    p.warnings.push_back("kappa above smallness threshold: asymptotic regimes "
                         "may not apply");
  if (!inviscid) {
    double dk = p.delta() + kappa;
    if (dk * dk - 4.0 * p.gamma_tilde() <= 0.0)
      p.warnings.push_back("overdamped large-frequency split unavailable: "
                           "(delta+kappa)^2 <= 4*gamma*b*nu*kappa");
  }
  return p;
}

struct CharacteristicRoots {
  double r = 0.0;
  // hi parts are the working values; lo parts carry the double-double tail
  // so the residual contract stays meaningful where it dips below double
  // rounding (large r).
  std::array<cplx, 3> roots{};
  std::array<cplx, 3> roots_lo{};
  bool near_degenerate = false;
  bool conjugate_pair = false;  // roots[0], roots[1] form the oscillatory pair

  cplx root_full(int j) const { return roots[j] + roots_lo[j]; }
};

namespace detail {

// Monic symbol cubic l^3 + c2 l^2 + c1 l + c0 in double-double coefficients.
struct symbol_cubic_t {
  dd c2, c1, c0;
};

inline symbol_cubic_t symbol_cubic(const ModelParams& p, double r) {
  dd r2 = two_prod(r, r);
  dd r4 = mul(r2, r2);
  dd bnu = p.inviscid ? dd(0.0) : two_prod(p.b, p.nu);
  // gamma - 1 is exact for gamma in (1,2] (Sterbenz)
  dd delta = add(bnu, two_prod(p.gamma - 1.0, p.kappa));
  dd gt = mul(mul(dd(p.gamma), bnu), dd(p.kappa));
  symbol_cubic_t c;
  c.c2 = mul(add(delta, dd(p.kappa)), r2);
  c.c1 = mul(add(dd(1.0), mul(gt, r2)), r2);
  c.c0 = mul(dd(p.kappa), r4);
  return c;
}

inline cdd eval_cubic(const symbol_cubic_t& C, const cdd& z) {
  cdd t = add(z, C.c2);
  t = add(mul(t, z), C.c1);
  t = add(mul(t, z), C.c0);
  return t;
}

inline dd eval_cubic_real(const symbol_cubic_t& C, const dd& x) {
  dd t = add(x, C.c2);
  t = add(mul(t, x), C.c1);
  t = add(mul(t, x), C.c0);
  return t;
}

inline cplx eval_cubic_d(const symbol_cubic_t& C, cplx z) {
  return ((z + C.c2.value()) * z + C.c1.value()) * z + C.c0.value();
}

inline cplx deriv_cubic_d(const symbol_cubic_t& C, cplx z) {
  return (3.0 * z + 2.0 * C.c2.value()) * z + C.c1.value();
}

struct polished_root {
  cplx hi{0.0, 0.0}, lo{0.0, 0.0};
};

// Newton steps from bisection or deflation seeds are bounded by the seed
// error (<= ~1e-8 of the root size even at a double root, where the seed
// error is the square root of rounding). A larger proposed step means the
// iterate sits where f' is unreliable (near-degenerate basin); taking it
// could hop to another root and silently duplicate an entry of the root
// multiset, so keep the seed instead.
inline bool step_too_large(cplx step, cplx at) {
  return std::abs(step) > 1e-2 * (1.0 + std::abs(at));
}

inline polished_root polish(const symbol_cubic_t& C, cplx seed) {
  cplx z = seed;
  for (int it = 0; it < 3; ++it) {
    cplx d = deriv_cubic_d(C, z);
    if (std::abs(d) == 0.0) break;
    cplx step = eval_cubic_d(C, z) / d;
    if (step_too_large(step, z)) break;
    z -= step;
  }
  polished_root out{z, {0.0, 0.0}};
  for (int it = 0; it < 3; ++it) {
    cdd pt{add(dd(out.hi.real()), dd(out.lo.real())),
           add(dd(out.hi.imag()), dd(out.lo.imag()))};
    cplx f = eval_cubic(C, pt).value();
    cplx d = deriv_cubic_d(C, out.hi);
    if (std::abs(d) == 0.0) break;
    cplx step = f / d;
    if (step_too_large(step, out.hi)) break;
    dd re = add(add(dd(out.hi.real()), dd(out.lo.real())), dd(-step.real()));
    dd im = add(add(dd(out.hi.imag()), dd(out.lo.imag())), dd(-step.imag()));
    out.hi = {re.hi, im.hi};
    out.lo = {re.lo, im.lo};
  }
  return out;
}

inline polished_root polish_real(const symbol_cubic_t& C, double seed) {
  dd x(seed);
  for (int it = 0; it < 4; ++it) {
    dd f = eval_cubic_real(C, x);
    double d = deriv_cubic_d(C, cplx(x.hi, 0.0)).real();
    if (d == 0.0) break;
    double step = f.value() / d;
    if (step_too_large(step, x.hi)) break;
    x = sub(x, dd(step));
  }
  return {{x.hi, 0.0}, {x.lo, 0.0}};
}

}  // namespace detail

// Roots of the per-frequency symbol cubic. Strategy: safeguarded Newton for
// one real root (one always exists), stable deflation to a quadratic, then
// double-double Newton polish and exact conjugate symmetrization.
inline CharacteristicRoots characteristic_roots(const ModelParams& p, double r) {
  using namespace detail;
  CharacteristicRoots out;
  out.r = r;
  if (r == 0.0) {
    out.near_degenerate = true;  // triple zero root
    return out;
  }
  symbol_cubic_t C = symbol_cubic(p, r);
  const double a2 = C.c2.value(), a1 = C.c1.value(), a0 = C.c0.value();
  const double scale = 1.0 + std::max({std::abs(a2), std::abs(a1), std::abs(a0)});

  // Real root: the cubic is positive at 0 (a0 = kappa r^4 > 0) and negative
  // at -scale (Cauchy bound), so bisection-guarded Newton cannot escape.
  double lo = -scale, hi = 0.0;
  double x = -a0 / a1;  // heat-branch guess
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 120; ++it) {
    double f = ((x + a2) * x + a1) * x + a0;
    if (f < 0.0)
      lo = x;
    else
      hi = x;
    double df = (3.0 * x + 2.0 * a2) * x + a1;
    double xn = (df != 0.0) ? x - f / df : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-16 * std::abs(xn)) {
      x = xn;
      break;
    }
    x = xn;
  }

  // Deflate: remaining quadratic z^2 + beta z + g; g from the product of
  // roots (stable since x < 0 strictly).
  double beta = a2 + x;
  double g = -a0 / x;
  double disc = beta * beta - 4.0 * g;
  cplx z1, z2;
  if (disc >= 0.0) {
    double s = std::sqrt(disc);
    double q = -0.5 * (beta + std::copysign(s, beta));
    z1 = cplx(q, 0.0);
    z2 = cplx(q != 0.0 ? g / q : -0.5 * beta, 0.0);
  } else {
    double s = std::sqrt(-disc);
    z1 = cplx(-0.5 * beta, 0.5 * s);
    z2 = std::conj(z1);
  }

  polished_root w0 = polish_real(C, x);
  polished_root w1 = polish(C, z1);
  polished_root w2 = polish(C, z2);

  // w0 is real by construction; decide whether w1, w2 form a genuine
  // conjugate pair or collapsed onto the real axis.
  double s1 = std::abs(w1.hi.imag()), s2 = std::abs(w2.hi.imag());
  double mag = 1.0 + std::abs(w1.hi) + std::abs(w2.hi);
  bool is_pair = (w1.hi.imag() * w2.hi.imag() < 0.0) &&
                 std::min(s1, s2) > 1e-13 * mag;

  if (is_pair) {
    // average the pair in double-double, then mirror exactly
    dd re = mul(add(add(dd(w1.hi.real()), dd(w1.lo.real())),
                    add(dd(w2.hi.real()), dd(w2.lo.real()))),
                dd(0.5));
    dd im = mul(sub(add(dd(w1.hi.imag()), dd(w1.lo.imag())),
                    add(dd(w2.hi.imag()), dd(w2.lo.imag()))),
                dd(0.5));
    if (w1.hi.imag() < 0.0) im = sub(dd(0.0), im);
    out.roots[0] = {re.hi, im.hi};
    out.roots_lo[0] = {re.lo, im.lo};
    out.roots[1] = std::conj(out.roots[0]);
    out.roots_lo[1] = std::conj(out.roots_lo[0]);
    out.roots[2] = w0.hi;
    out.roots_lo[2] = w0.lo;
    out.conjugate_pair = true;
  } else {
    polished_root re1 = polish_real(C, w1.hi.real());
    polished_root re2 = polish_real(C, w2.hi.real());
    std::array<polished_root, 3> all{w0, re1, re2};
    std::sort(all.begin(), all.end(),
              [](const polished_root& u, const polished_root& v) {
                return u.hi.real() > v.hi.real();
              });
    for (int j = 0; j < 3; ++j) {
      out.roots[j] = all[j].hi;
      out.roots_lo[j] = all[j].lo;
    }
    out.conjugate_pair = false;
  }

  double dmin = std::min({std::abs(out.roots[0] - out.roots[1]),
                          std::abs(out.roots[0] - out.roots[2]),
                          std::abs(out.roots[1] - out.roots[2])});
  out.near_degenerate = dmin < 1e-8 * (1.0 + r * r);
  return out;
}

// |Lambda(lambda_j)| evaluated in double-double at the hi+lo root.
inline double root_residual(const ModelParams& p, const CharacteristicRoots& cr,
                            int j) {
  using namespace detail;
  if (cr.r == 0.0) return 0.0;
  symbol_cubic_t C = symbol_cubic(p, cr.r);
  cdd pt{add(dd(cr.roots[j].real()), dd(cr.roots_lo[j].real())),
         add(dd(cr.roots[j].imag()), dd(cr.roots_lo[j].imag()))};
  return std::abs(eval_cubic(C, pt).value());
}

// Leading small-frequency approximants: oscillatory pair then heat branch.
inline std::array<cplx, 3> small_freq_expansion(const ModelParams& p, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("small_freq_expansion: r must be > 0");
  double d2 = 0.5 * p.delta() * r * r;
  return {cplx(-d2, r), cplx(-d2, -r), cplx(-p.kappa * r * r, 0.0)};
}

// Leading large-frequency approximants. Viscous mode: two real diffusive
// branches and the constant branch -1/(gamma*b*nu). Inviscid mode: the
// modified oscillatory pair and the heat branch -gamma*kappa*r^2.
inline std::array<cplx, 3> large_freq_expansion(const ModelParams& p, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("large_freq_expansion: r must be > 0");
  double r2 = r * r;
  if (p.inviscid) {
    double om = std::sqrt(1.0 / p.gamma) * r;
    double re = -(p.gamma - 1.0) / (2.0 * p.gamma * p.gamma * p.kappa);
    return {cplx(re, om), cplx(re, -om), cplx(-p.gamma * p.kappa * r2, 0.0)};
  }
  double dk = p.delta() + p.kappa;
  double disc = dk * dk - 4.0 * p.gamma * p.bnu() * p.kappa;
  if (!(disc > 0.0))
    throw std::domain_error("large_freq_expansion: (delta+kappa)^2 - "
                            "4*gamma*b*nu*kappa must be positive");
  double s = std::sqrt(disc);
  return {cplx(0.5 * (-dk + s) * r2, 0.0), cplx(0.5 * (-dk - s) * r2, 0.0),
          cplx(-1.0 / (p.gamma * p.bnu()), 0.0)};
}

inline double stability_margin(const ModelParams& p,
                               const std::vector<double>& r_grid) {
  if (r_grid.empty())
    throw std::invalid_argument("stability_margin: empty frequency grid");
  double margin = -std::numeric_limits<double>::infinity();
  for (double r : r_grid) {
    if (!(r > 0.0))
      throw std::invalid_argument("stability_margin: grid values must be > 0");
    CharacteristicRoots cr = characteristic_roots(p, r);
    for (int j = 0; j < 3; ++j) margin = std::max(margin, cr.roots[j].real());
  }
  return margin;
}

}  // namespace blackstock
