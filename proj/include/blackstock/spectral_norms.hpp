#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blackstock/detail/gauss.hpp"
#include "blackstock/detail/threads.hpp"
#include "blackstock/model.hpp"
#include "blackstock/phase_solver.hpp"

namespace blackstock {

inline double unit_sphere_measure(int n) {
  if (n < 1) throw std::invalid_argument("unit_sphere_measure: dimension must be >= 1");
  return 2.0 * std::pow(detail::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2)
    throw std::invalid_argument("log_spaced: need 0 < lo < hi and count >= 2");
  std::vector<double> out(count);
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

enum class Zone { interior, middle, exterior, all };

// Radial quadrature for L^2(R^n) norms of rotation-invariant Fourier
// multipliers. Nodes are composite Gauss-Legendre panels; the zone
// boundaries are always panel breakpoints, so a sharp zone cutoff is an
// exact sub-sum of panels rather than an interpolation.
struct RadialGrid {
  int n = 3;
  double eps_zone = 0.1;
  double n_zone = 10.0;
  double r_max = 1e3;
  std::vector<double> nodes;
  std::vector<double> weights;

  double omega() const { return unit_sphere_measure(n); }

  std::pair<double, double> zone_range(Zone z) const {
    switch (z) {
      case Zone::interior: return {0.0, eps_zone};
      case Zone::middle: return {eps_zone, n_zone};
      case Zone::exterior: return {n_zone, r_max * 2.0};
      default: return {0.0, r_max * 2.0};
    }
  }

  // Grid reproduction of int_0^R r^{n-1} e^{-r^2} dr against the exact
  // (1/2)Gamma(n/2); with R >= 10 the truncated tail is far below 1e-16.
  double calibration_error() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      acc += weights[i] * std::pow(nodes[i], n - 1) *
             std::exp(-nodes[i] * nodes[i]);
    double exact = 0.5 * std::tgamma(0.5 * n);
    return std::abs(acc - exact) / exact;
  }

  static RadialGrid standard(int n, int panels = 64, int per_panel = 16,
                             double r_min = 1e-6, double r_max = 1e3,
                             double eps_zone = 0.1, double n_zone = 10.0);
  static RadialGrid time_adapted(int n, double t, double c_env,
                                 double eps_zone = 0.1, double n_zone = 10.0,
                                 double r_max = 1e3);
};

namespace detail {

inline void insert_breakpoint(std::vector<double>& bp, double x) {
  if (!(x > bp.front()) || !(x < bp.back())) return;
  auto it = std::lower_bound(bp.begin(), bp.end(), x);
  if (std::abs(*it - x) < 1e-9 * x) return;
  if (it != bp.begin() && std::abs(x - *(it - 1)) < 1e-9 * x) return;
  bp.insert(it, x);
}

inline RadialGrid from_breakpoints(int n, std::vector<double> bp,
                                   int per_panel, double eps_zone,
                                   double n_zone, double r_max) {
  detail::insert_breakpoint(bp, eps_zone);
  detail::insert_breakpoint(bp, n_zone);
  RadialGrid g;
  g.n = n;
  g.eps_zone = eps_zone;
  g.n_zone = n_zone;
  g.r_max = r_max;
  std::vector<double> x, w;
  detail::gauss_legendre(per_panel, x, w);
  g.nodes.reserve((bp.size() - 1) * per_panel);
  g.weights.reserve((bp.size() - 1) * per_panel);
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    double a = bp[k], b = bp[k + 1];
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < per_panel; ++i) {
      g.nodes.push_back(mid + half * x[i]);
      g.weights.push_back(half * w[i]);
    }
  }
  return g;
}

}  // namespace detail

inline RadialGrid RadialGrid::standard(int n, int panels, int per_panel,
                                       double r_min, double r_max,
                                       double eps_zone, double n_zone) {
  if (n < 1) throw std::invalid_argument("RadialGrid: dimension must be >= 1");
  if (!(r_min > 0.0) || !(r_max > r_min) || panels < 4 || per_panel < 4)
    throw std::invalid_argument("RadialGrid: bad grid shape");
  std::vector<double> bp;
  bp.push_back(0.0);
  // A true panel on [0, r_min] keeps the origin's contribution (the r^{n-1}
  // measure is integrable but not negligible for small n).
  double la = std::log(r_min), lb = std::log(r_max);
  for (int i = 0; i <= panels; ++i)
    bp.push_back(std::exp(la + (lb - la) * i / panels));
  bp.back() = r_max;
  return detail::from_breakpoints(n, std::move(bp), per_panel, eps_zone,
                                  n_zone, r_max);
}

// Grid tuned to multipliers of the form (oscillation in r t) x e^{-c r^2 t}:
// uniform panels of width 6*pi/t (three oscillation periods, well inside the
// Gauss-Legendre 16 accuracy envelope) cover the region where the envelope
// exceeds e^{-36}, log panels cover the dead tail out to r_max.
inline RadialGrid RadialGrid::time_adapted(int n, double t, double c_env,
                                           double eps_zone, double n_zone,
                                           double r_max) {
  if (!(c_env > 0.0))
    throw std::invalid_argument("RadialGrid: envelope rate must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("RadialGrid: t must be >= 0");
  if (t < 10.0) return standard(n, 64, 16, 1e-6, r_max, eps_zone, n_zone);
  double r_osc = std::min(r_max, std::sqrt(36.0 / (c_env * t)));
  int osc_panels = std::max(8, static_cast<int>(std::ceil(r_osc * t / (6.0 * detail::pi))));
  std::vector<double> bp;
  bp.reserve(osc_panels + 26);
  for (int i = 0; i <= osc_panels; ++i) bp.push_back(r_osc * i / osc_panels);
  if (r_osc < r_max) {
    int log_panels = 24;
    double la = std::log(r_osc), lb = std::log(r_max);
    for (int i = 1; i <= log_panels; ++i)
      bp.push_back(std::exp(la + (lb - la) * i / log_panels));
    bp.back() = r_max;
  }
  return detail::from_breakpoints(n, std::move(bp), 16, eps_zone, n_zone,
                                  r_max);
}

// sqrt(omega_n * sum w_i r_i^{n-1} |m(r_i)|^2) over the requested zone.
// NaN from the multiplier is reported with the offending node; evaluation
// runs in parallel slots, reduction is sequential and deterministic.
template <class F>
double l2_norm_radial(F&& m, const RadialGrid& g, Zone zone = Zone::all) {
  auto range = g.zone_range(zone);
  const std::size_t count = g.nodes.size();
  std::vector<double> term(count, 0.0);
  detail::parallel_for(count, [&](std::size_t i) {
    double r = g.nodes[i];
    if (r <= range.first || r >= range.second) return;
    std::complex<double> v = m(r);
    term[i] = g.weights[i] * std::pow(r, g.n - 1) * std::norm(v);
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (std::isnan(term[i])) {
      char buf[96];
      std::snprintf(buf, sizeof buf,
                    "l2_norm_radial: multiplier returned NaN at r=%.17g",
                    g.nodes[i]);
      throw std::runtime_error(buf);
    }
    acc += term[i];
  }
  return std::sqrt(g.omega() * acc);
}

// Radial Gaussian datum a * exp(-|x|^2 / (2 sigma^2)) with every norm the
// studies need in closed form (unitary Fourier convention throughout, so
// Plancherel is an isometry and P_f = (2pi)^{n/2} f_hat(0)).
struct GaussianComponent {
  double a = 0.0;
  double sigma = 1.0;
};

struct GaussianData {
  int n = 3;
  std::array<GaussianComponent, 3> g{};  // psi0, psi1, psi2
  // Optional second piece of psi2; a two-Gaussian difference is the only way
  // radial Gaussian data can reach P_{psi2} = 0.
  GaussianComponent g2b{};

  static GaussianData make(int n, double a0, double s0, double a1, double s1,
                           double a2, double s2) {
    GaussianData d;
    d.n = n;
    d.g = {GaussianComponent{a0, s0}, GaussianComponent{a1, s1},
           GaussianComponent{a2, s2}};
    return d;
  }

  double omega() const { return unit_sphere_measure(n); }

  double hat(int j, double r) const {
    double v = hat_c(g[j], r);
    if (j == 2) v += hat_c(g2b, r);
    return v;
  }
  double moment(int j) const {
    double v = moment_c(g[j]);
    if (j == 2) v += moment_c(g2b);
    return v;
  }
  // For the two-piece datum the norm accessors return the triangle-inequality
  // sum: an upper bound, exact whenever one piece vanishes. Bound assembly
  // only ever needs an upper bound.
  double l1(int j) const { return pair(j, [&](const GaussianComponent& c) { return l1_c(c); }); }
  double l11(int j) const { return pair(j, [&](const GaussianComponent& c) { return l11_c(c); }); }
  double l2(int j) const { return pair(j, [&](const GaussianComponent& c) { return l2_c(c); }); }
  double hs(int j, double s) const {
    return pair(j, [&](const GaussianComponent& c) { return hs_c(c, s); });
  }
  double l2_l1(int j) const { return l2(j) + l1(j); }
  double l2_l11(int j) const { return l2(j) + l11(j); }
  double hs_l1(int j, double s) const { return hs(j, s) + l1(j); }
  // Hausdorff-Young surrogate (2pi)^{-n/2} ||g_hat||_{L^1(dxi)}; for a
  // Gaussian it collapses to |a|.
  double linf_surrogate(int j) const {
    return pair(j, [](const GaussianComponent& c) { return std::abs(c.a); });
  }

 private:
  template <class F>
  double pair(int j, F&& f) const {
    double v = f(g[j]);
    if (j == 2 && g2b.a != 0.0) v += f(g2b);
    return v;
  }
  double hat_c(const GaussianComponent& c, double r) const {
    if (c.a == 0.0) return 0.0;
    return c.a * std::pow(c.sigma, n) * std::exp(-0.5 * c.sigma * c.sigma * r * r);
  }
  double moment_c(const GaussianComponent& c) const {
    if (c.a == 0.0) return 0.0;
    return c.a * std::pow(2.0 * detail::pi, 0.5 * n) * std::pow(c.sigma, n);
  }
  double l1_c(const GaussianComponent& c) const { return std::abs(moment_c(c)); }
  double l11_c(const GaussianComponent& c) const {
    if (c.a == 0.0) return 0.0;
    double first_moment = std::abs(c.a) * omega() *
                          std::pow(2.0, 0.5 * (n - 1)) *
                          std::pow(c.sigma, n + 1) * std::tgamma(0.5 * (n + 1));
    return l1_c(c) + first_moment;
  }
  double l2_c(const GaussianComponent& c) const {
    if (c.a == 0.0) return 0.0;
    return std::abs(c.a) * std::pow(detail::pi, 0.25 * n) *
           std::pow(c.sigma, 0.5 * n);
  }
  double hs_c(const GaussianComponent& c, double s) const {
    if (c.a == 0.0) return 0.0;
    return std::abs(c.a) *
           std::sqrt(0.5 * std::pow(c.sigma, n - 2.0 * s) * omega() *
                     std::tgamma(s + 0.5 * n));
  }
};

// Decay and growth laws as total functions of tau (callers substitute
// tau = 1 + t where the printed statements do). The n=2 and n=4 logarithmic
// branches are written so that evaluation at tau = 1 + t reproduces
// ln(e + t) literally.
namespace detail {
constexpr double euler_e = 2.718281828459045235360287471;
}

inline double decay_D(int n, double tau) {
  if (n < 1) throw std::invalid_argument("decay_D: dimension must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("decay_D: tau must be > 0");
  if (n == 1) return std::sqrt(tau);
  if (n == 2) return std::sqrt(std::log(detail::euler_e - 1.0 + tau));
  return std::pow(tau, 0.5 - 0.25 * n);
}

inline double decay_Dtilde(int n, double tau) {
  if (n < 1) throw std::invalid_argument("decay_Dtilde: dimension must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("decay_Dtilde: tau must be > 0");
  if (n <= 3) return std::pow(tau, 2.0 - 0.5 * n);
  if (n == 4) return std::sqrt(std::log(detail::euler_e - 1.0 + tau));
  return std::pow(tau, 1.0 - 0.25 * n);
}

inline double growth_G1(int n, double tau) {
  if (n < 1) throw std::invalid_argument("growth_G1: dimension must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("growth_G1: tau must be > 0");
  if (n == 1) return std::pow(tau, 0.25);
  if (n == 2) return std::sqrt(std::log(detail::euler_e - 1.0 + tau));
  return 1.0;
}

// The comparison rate B_n(t) takes t itself; the n=2 branch needs t > 1 to
// be real and positive (t >= e keeps it monotone).
inline double kuznetsov_B(int n, double t) {
  if (n < 1) throw std::invalid_argument("kuznetsov_B: dimension must be >= 1");
  if (!(t > 0.0)) throw std::invalid_argument("kuznetsov_B: t must be > 0");
  if (n == 1) return std::pow(t, -0.75);
  if (n == 2) {
    if (!(t > 1.0))
      throw std::invalid_argument("kuznetsov_B: the n=2 branch needs t > 1");
    return 1.0 / std::sqrt(t * std::log(t));
  }
  return 1.0 / std::sqrt(t);
}

struct DecayLaws {
  double D = 0.0;
  double Dtilde = 0.0;
  double G1 = 0.0;
  double B = 0.0;
};

inline DecayLaws decay_laws(int n, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("decay_laws: t must be > 0");
  DecayLaws out;
  out.D = decay_D(n, 1.0 + t);
  out.Dtilde = decay_Dtilde(n, 1.0 + t);
  out.G1 = growth_G1(n, 1.0 + t);
  out.B = kuznetsov_B(n, t);
  return out;
}

// Least squares in log-log coordinates. log_factor_mode additionally records
// the sequence y^2 / ln(t) and its max/min spread, the natural constancy
// check for laws carrying a sqrt(log) factor.
struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double ratio_spread = 0.0;
  std::vector<double> ratios;
};

inline PowerLawFit fit_power_law(
    const std::vector<std::pair<double, double>>& samples,
    bool log_factor_mode = false) {
  if (samples.size() < 8)
    throw std::invalid_argument("fit_power_law: need at least 8 samples");
  double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
  for (const auto& s : samples) {
    if (!(s.first > 0.0) || !(s.second > 0.0))
      throw std::invalid_argument("fit_power_law: samples must be positive");
    tmin = std::min(tmin, s.first);
    tmax = std::max(tmax, s.first);
  }
  if (!(tmax >= 100.0 * tmin))
    throw std::invalid_argument(
        "fit_power_law: samples must span at least two decades");
  double sx = 0.0, sz = 0.0;
  for (const auto& s : samples) {
    sx += std::log(s.first);
    sz += std::log(s.second);
  }
  double xb = sx / samples.size(), zb = sz / samples.size();
  double sxx = 0.0, sxz = 0.0;
  for (const auto& s : samples) {
    double dx = std::log(s.first) - xb;
    sxx += dx * dx;
    sxz += dx * (std::log(s.second) - zb);
  }
  PowerLawFit fit;
  fit.slope = sxz / sxx;
  fit.intercept = zb - fit.slope * xb;
  double rss = 0.0;
  for (const auto& s : samples) {
    double resid = std::log(s.second) - (fit.intercept + fit.slope * std::log(s.first));
    rss += resid * resid;
  }
  fit.rms = std::sqrt(rss / samples.size());
  if (log_factor_mode) {
    fit.ratios.reserve(samples.size());
    for (const auto& s : samples) {
      if (!(s.first > 1.0))
        throw std::invalid_argument("fit_power_law: log-factor mode needs t > 1");
      fit.ratios.push_back(s.second * s.second / std::log(s.first));
    }
    fit.ratio_min = *std::min_element(fit.ratios.begin(), fit.ratios.end());
    fit.ratio_max = *std::max_element(fit.ratios.begin(), fit.ratios.end());
    fit.ratio_spread = fit.ratio_max / fit.ratio_min;
  }
  return fit;
}

// The four interior multiplier families whose L^2 norms follow the printed
// decay laws, integrated over the full half-line: beyond the interior zone
// the Gaussian envelope is exponentially dead for t >> 1, so the full-range
// quadrature matches the cutoff statement up to that dead tail while staying
// exactly self-similar (pure power law, no cutoff transient).
//   1: r^s e^{-c r^2 t}            -> (1+t)^{-s/2 - n/4}
//   2: r^{-1}|sin(r t)| e^{-c r^2 t}   -> D_n(1+t)
//   3: r^{-1} e^{-c r^2 t} (n >= 3)    -> (1+t)^{1/2 - n/4}
//   4: r^{-2} sin^2(r t / 2) e^{-c r^2 t} -> D~_n(1+t)
struct FamilyNorm {
  double value = 0.0;
  double law = 0.0;
  double ratio = 0.0;
};

inline FamilyNorm lemma_family_norm(int family, int n, double s, double c,
                                    double t) {
  if (family < 1 || family > 4)
    throw std::invalid_argument("lemma_family_norm: family must be in 1..4");
  if (!(c > 0.0) || !(t > 0.0))
    throw std::invalid_argument("lemma_family_norm: need c > 0 and t > 0");
  if (family == 3 && n < 3)
    throw std::invalid_argument(
        "lemma_family_norm: the r^{-1} family needs n >= 3");
  RadialGrid grid = RadialGrid::time_adapted(n, t, 0.5 * c);
  auto mult = [&](double r) -> std::complex<double> {
    double env = std::exp(-c * r * r * t);
    switch (family) {
      case 1: return std::pow(r, s) * env;
      case 2: return std::abs(std::sin(r * t)) / r * env;
      case 3: return env / r;
      default: {
        double si = std::sin(0.5 * r * t);
        return si * si / (r * r) * env;
      }
    }
  };
  FamilyNorm out;
  out.value = l2_norm_radial(mult, grid, Zone::all);
  switch (family) {
    case 1: out.law = std::pow(1.0 + t, -0.5 * s - 0.25 * n); break;
    case 2: out.law = decay_D(n, 1.0 + t); break;
    case 3: out.law = std::pow(1.0 + t, 0.5 - 0.25 * n); break;
    default: out.law = decay_Dtilde(n, 1.0 + t); break;
  }
  out.ratio = out.value / out.law;
  return out;
}

namespace detail {

inline RadialGrid solution_grid(int n, double t, double kappa) {
  // Solution kernels decay no slower than e^{-kappa r^2 t}; halving the rate
  // keeps a 2x safety margin on the oscillation window.
  return RadialGrid::time_adapted(n, t, 0.5 * kappa);
}

inline void check_time_grid(const std::vector<double>& t_grid,
                            const char* who) {
  if (t_grid.empty())
    throw std::invalid_argument(std::string(who) + ": empty time grid");
  for (double t : t_grid)
    if (!(t >= 0.0))
      throw std::invalid_argument(std::string(who) + ": t must be >= 0");
}

}  // namespace detail

// Per-time L^2 norms of psi, its first two time derivatives, and the
// H^{s+4} seminorm, next to the upper bounds assembled from the decay laws
// and the data norms (reported side by side; the implied constants are not
// claimed, so ratios are for fitting, not asserting).
struct SolutionNormRow {
  double t = 0.0;
  double psi = 0.0;
  double psi_t = 0.0;
  double psi_tt = 0.0;
  double hs4 = 0.0;
  double bound_psi = 0.0;
  double bound_psi_t = 0.0;
  double bound_psi_tt = 0.0;
  double bound_hs4 = 0.0;
};

inline std::vector<SolutionNormRow> solution_norms(
    const ModelParams& p, const GaussianData& d,
    const std::vector<double>& t_grid, double s = 0.0) {
  detail::check_time_grid(t_grid, "solution_norms");
  const int n = d.n;
  std::vector<SolutionNormRow> rows(t_grid.size());
  detail::parallel_for(t_grid.size(), [&](std::size_t ti) {
    const double t = t_grid[ti];
    RadialGrid grid = detail::solution_grid(n, t, p.kappa);
    double a_psi = 0.0, a_pt = 0.0, a_ptt = 0.0, a_hs = 0.0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      double r = grid.nodes[i];
      KernelTriple K = kernels_at(characteristic_roots(p, r), t);
      double h0 = d.hat(0, r), h1 = d.hat(1, r), h2 = d.hat(2, r);
      double ps = K.k[0].real() * h0 + K.k[1].real() * h1 + K.k[2].real() * h2;
      double pt = K.kt[0].real() * h0 + K.kt[1].real() * h1 + K.kt[2].real() * h2;
      double ptt = K.ktt[0].real() * h0 + K.ktt[1].real() * h1 + K.ktt[2].real() * h2;
      double w = grid.weights[i] * std::pow(r, n - 1);
      a_psi += w * ps * ps;
      a_pt += w * pt * pt;
      a_ptt += w * ptt * ptt;
      a_hs += w * std::pow(r, 2.0 * (s + 4.0)) * ps * ps;
    }
    SolutionNormRow row;
    row.t = t;
    double om = grid.omega();
    row.psi = std::sqrt(om * a_psi);
    row.psi_t = std::sqrt(om * a_pt);
    row.psi_tt = std::sqrt(om * a_ptt);
    row.hs4 = std::sqrt(om * a_hs);

    double tau = 1.0 + t;
    double A0 = d.l2_l11(0), A1 = d.l2_l11(1), A2 = d.l2_l11(2);
    double P0 = std::abs(d.moment(0)), P1 = std::abs(d.moment(1)),
           P2 = std::abs(d.moment(2));
    double last = (n == 2)
                      ? tau * std::sqrt(std::log(detail::euler_e - 1.0 + tau)) * P2
                      : decay_Dtilde(n, tau) * P2;
    row.bound_psi = std::pow(tau, -0.25 * (n + 2.0)) * A0 +
                    std::pow(tau, -0.25 * n) * A1 + decay_D(n, tau) * A2 +
                    std::pow(tau, -0.25 * n) * P0 + decay_D(n, tau) * P1 + last;
    row.bound_psi_t = std::pow(tau, 0.5 - 0.25 * n) *
                      (d.l2_l1(0) + d.l2_l1(1) + d.l2_l1(2));
    row.bound_psi_tt = std::pow(tau, -0.25 * n) *
                       (d.hs_l1(0, 2.0) + d.hs_l1(1, 2.0) + d.l2_l1(2));
    row.bound_hs4 = std::pow(tau, -0.5 * (s + 2.0) - 0.25 * n) *
                    (d.hs_l1(0, s + 4.0) + d.hs_l1(1, s + 2.0) + d.hs_l1(2, s));
    rows[ti] = row;
  });
  return rows;
}

// || psi - J0 psi0 - J1 psi1 - J2 psi2 ||_{L^2} via the Fourier-side
// subtraction (K_j - J_j) psi_j, together with the full solution norm and
// their ratio.
struct ProfileErrorRow {
  double t = 0.0;
  double error = 0.0;
  double solution = 0.0;
  double ratio = 0.0;
};

inline std::vector<ProfileErrorRow> profile_error_norm(
    const ModelParams& p, const GaussianData& d,
    const std::vector<double>& t_grid) {
  if (d.n < 3)
    throw std::invalid_argument("profile_error_norm: dimension must be >= 3");
  detail::check_time_grid(t_grid, "profile_error_norm");
  const int n = d.n;
  std::vector<ProfileErrorRow> rows(t_grid.size());
  detail::parallel_for(t_grid.size(), [&](std::size_t ti) {
    const double t = t_grid[ti];
    RadialGrid grid = detail::solution_grid(n, t, p.kappa);
    double a_err = 0.0, a_sol = 0.0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      double r = grid.nodes[i];
      KernelTriple K = kernels_at(characteristic_roots(p, r), t);
      ProfileTriple J = profiles_at(p, r, t);
      double h0 = d.hat(0, r), h1 = d.hat(1, r), h2 = d.hat(2, r);
      double ps = K.k[0].real() * h0 + K.k[1].real() * h1 + K.k[2].real() * h2;
      double pe = (K.k[0].real() - J.j0) * h0 + (K.k[1].real() - J.j1) * h1 +
                  (K.k[2].real() - J.j2) * h2;
      double w = grid.weights[i] * std::pow(r, n - 1);
      a_err += w * pe * pe;
      a_sol += w * ps * ps;
    }
    ProfileErrorRow row;
    row.t = t;
    row.error = std::sqrt(grid.omega() * a_err);
    row.solution = std::sqrt(grid.omega() * a_sol);
    row.ratio = row.solution > 0.0 ? row.error / row.solution : 0.0;
    rows[ti] = row;
  });
  return rows;
}

// Lower-bound chain of the optimality theorem: the interior profile term
// ||chi J2||_{L^2} |psi2_hat(0)|, the interior correction
// ||chi (psi_hat - J2 psi2_hat(0))||, their difference, and the full norm
// normalized against D~_n(1+t) |P_{psi2}|. onset is the first grid time from
// which the difference stays positive.
struct OptimalityRow {
  double t = 0.0;
  double profile_term = 0.0;
  double correction = 0.0;
  double lower_bound = 0.0;
  double solution = 0.0;
  double ratio = 0.0;
};

struct OptimalityLedger {
  std::vector<OptimalityRow> rows;
  double onset = std::numeric_limits<double>::infinity();
};

inline OptimalityLedger optimality_probe(const ModelParams& p,
                                         const GaussianData& d,
                                         const std::vector<double>& t_grid) {
  if (d.n < 3)
    throw std::invalid_argument("optimality_probe: dimension must be >= 3");
  detail::check_time_grid(t_grid, "optimality_probe");
  const double P2 = d.moment(2);
  if (P2 == 0.0)
    throw std::invalid_argument(
        "optimality_probe: the second-derivative datum must have a nonzero moment");
  const int n = d.n;
  const double hat20 = d.hat(2, 0.0);
  OptimalityLedger ledger;
  ledger.rows.resize(t_grid.size());
  detail::parallel_for(t_grid.size(), [&](std::size_t ti) {
    const double t = t_grid[ti];
    RadialGrid grid = detail::solution_grid(n, t, p.kappa);
    double a_prof = 0.0, a_corr = 0.0, a_sol = 0.0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      double r = grid.nodes[i];
      KernelTriple K = kernels_at(characteristic_roots(p, r), t);
      double h0 = d.hat(0, r), h1 = d.hat(1, r), h2 = d.hat(2, r);
      double ps = K.k[0].real() * h0 + K.k[1].real() * h1 + K.k[2].real() * h2;
      double w = grid.weights[i] * std::pow(r, n - 1);
      a_sol += w * ps * ps;
      if (r < grid.eps_zone) {
        double j2 = profiles_at(p, r, t).j2;
        double prof = j2 * hat20;
        a_prof += w * prof * prof;
        a_corr += w * (ps - prof) * (ps - prof);
      }
    }
    OptimalityRow row;
    row.t = t;
    double om = grid.omega();
    row.profile_term = std::sqrt(om * a_prof);
    row.correction = std::sqrt(om * a_corr);
    row.lower_bound = row.profile_term - row.correction;
    row.solution = std::sqrt(om * a_sol);
    row.ratio = row.solution / (decay_Dtilde(n, 1.0 + t) * std::abs(P2));
    ledger.rows[ti] = row;
  });
  for (std::size_t i = ledger.rows.size(); i-- > 0;) {
    if (ledger.rows[i].lower_bound > 0.0)
      ledger.onset = ledger.rows[i].t;
    else
      break;
  }
  return ledger;
}

// Gap to the viscoelastic comparison flow (mu = delta) under the Laplacian
// data coupling psi2_hat = -r^2 (C0 psi0_hat + C1 psi1_hat); the stored
// third datum of d is ignored by construction. normalized = gap / D_n(1+t),
// law = B_n(t), ratio = normalized / (law * data factor).
struct KuznetsovRow {
  double t = 0.0;
  double gap = 0.0;
  double normalized = 0.0;
  double law = 0.0;
  double ratio = 0.0;
};

inline std::vector<KuznetsovRow> kuznetsov_gap(const ModelParams& p,
                                               const GaussianData& d,
                                               double C0, double C1,
                                               const std::vector<double>& t_grid) {
  if (C0 == 0.0 || C1 == 0.0)
    throw std::invalid_argument(
        "kuznetsov_gap: both coupling constants must be nonzero");
  if (t_grid.empty())
    throw std::invalid_argument("kuznetsov_gap: empty time grid");
  for (double t : t_grid)
    if (!(t > 0.0))
      throw std::invalid_argument("kuznetsov_gap: t must be > 0");
  const int n = d.n;
  const double mu = p.delta();
  const double data_factor = d.l2_l11(0) + d.l2_l11(1);
  std::vector<KuznetsovRow> rows(t_grid.size());
  detail::parallel_for(t_grid.size(), [&](std::size_t ti) {
    const double t = t_grid[ti];
    RadialGrid grid = detail::solution_grid(n, t, p.kappa);
    double a_gap = 0.0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      double r = grid.nodes[i];
      double h0 = d.hat(0, r), h1 = d.hat(1, r);
      double h2 = -r * r * (C0 * h0 + C1 * h1);
      KernelTriple K = kernels_at(characteristic_roots(p, r), t);
      double ps = K.k[0].real() * h0 + K.k[1].real() * h1 + K.k[2].real() * h2;
      ViscoelasticKernel G = viscoelastic_kernels(mu, r, t);
      double ph = G.g0 * h0 + G.g1 * h1;
      double w = grid.weights[i] * std::pow(r, n - 1);
      a_gap += w * (ps - ph) * (ps - ph);
    }
    KuznetsovRow row;
    row.t = t;
    row.gap = std::sqrt(grid.omega() * a_gap);
    row.normalized = row.gap / decay_D(n, 1.0 + t);
    row.law = kuznetsov_B(n, t);
    row.ratio = data_factor > 0.0 ? row.normalized / (row.law * data_factor) : 0.0;
    rows[ti] = row;
  });
  return rows;
}

// Upper-bound growth check for n in {1,2}: n=1 fits the slope of ||psi||
// itself (claimed <= 3/2), n=2 fits the slope of the ratio
// ||psi|| / ((1+t) sqrt(ln(e+t))) (claimed bounded, so slope <= 0).
struct LowDimGrowth {
  int n = 1;
  double slope = 0.0;
  double max_ratio = 0.0;
  bool within_bound = true;
  std::vector<std::pair<double, double>> samples;
};

inline LowDimGrowth low_dim_growth(const ModelParams& p, const GaussianData& d,
                                   const std::vector<double>& t_grid) {
  if (d.n != 1 && d.n != 2)
    throw std::invalid_argument("low_dim_growth: dimension must be 1 or 2");
  detail::check_time_grid(t_grid, "low_dim_growth");
  const int n = d.n;
  LowDimGrowth out;
  out.n = n;
  std::vector<SolutionNormRow> rows = solution_norms(p, d, t_grid);
  double peak = 0.0;
  for (const auto& row : rows) {
    out.samples.emplace_back(row.t, row.psi);
    peak = std::max(peak, row.psi);
  }
  if (peak == 0.0) return out;  // zero data: trivially within every bound
  std::vector<std::pair<double, double>> fit_samples;
  for (const auto& s : out.samples) {
    if (!(s.first > 0.0) || !(s.second > 0.0)) continue;
    double tau = 1.0 + s.first;
    double law = (n == 1)
                     ? std::pow(tau, 1.5)
                     : tau * std::sqrt(std::log(detail::euler_e - 1.0 + tau));
    double y = (n == 1) ? s.second : s.second / law;
    out.max_ratio = std::max(out.max_ratio, s.second / law);
    fit_samples.emplace_back(s.first, y);
  }
  PowerLawFit fit = fit_power_law(fit_samples);
  out.slope = fit.slope;
  out.within_bound = (n == 1) ? (fit.slope <= 1.55) : (fit.slope <= 0.05);
  return out;
}

}  // namespace blackstock
