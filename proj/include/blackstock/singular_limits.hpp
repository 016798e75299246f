#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spectral_norms.hpp"

namespace blackstock {

// ---------------------------------------------------------------------------
// Limit-equation building blocks (small-diffusivity program).
// ---------------------------------------------------------------------------

inline double consistent_third_datum(double psi0_hat, double psi1_hat,
                                     const ModelParams& p, double r) {
  return -r * r * (p.bnu() * psi1_hat + psi0_hat);
}

struct LimitMode {
  double psi = 0.0;
  double psi_t = 0.0;
};

inline LimitMode solve_limit_mode(double psi0_hat, double psi1_hat,
                                  const ModelParams& p, double r, double t) {
  ViscoelasticKernel g = viscoelastic_kernels(p.bnu(), r, t);
  return {g.g0 * psi0_hat + g.g1 * psi1_hat,
          g.dg0 * psi0_hat + g.dg1 * psi1_hat};
}

inline double heat_layer(double psi0_hat, double psi1_hat, const ModelParams& p,
                         double r, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("heat_layer: z must be >= 0");
  double datum = (p.gamma - 1.0) * (psi1_hat + p.bnu() * r * r * psi0_hat);
  return std::exp(-r * r * z) * datum;
}

namespace detail {

template <class F>
double simpson_rec(F&& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth,
                   const char* who, double r, double t) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol || b - a <= 1e-14 * (1.0 + std::abs(a)))
    return left + right + err / 15.0;
  if (depth > 28) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "%s: time quadrature did not converge at r=%.6g, t=%.6g",
                  who, r, t);
    throw std::runtime_error(msg);
  }
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, who,
                     r, t) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1,
                     who, r, t);
}

// Adaptive Simpson over [a,b], pre-split into half-period chunks so an
// oscillatory integrand can never alias into false convergence.
template <class F>
double osc_integrate(F&& f, double a, double b, double abs_tol, double freq,
                     const char* who, double r, double t) {
  if (!(b > a)) return 0.0;
  double span = b - a;
  int chunks = 1 + static_cast<int>(std::min(2.0e5, freq * span / 3.0));
  double tol = abs_tol / chunks;
  double total = 0.0;
  double x0 = a, f0 = f(a);
  for (int k = 1; k <= chunks; ++k) {
    double x1 = k == chunks ? b : a + span * k / chunks;
    double f1 = f(x1);
    double xm = 0.5 * (x0 + x1), fm = f(xm);
    double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_rec(f, x0, f0, x1, f1, xm, fm, whole, tol, 0, who, r, t);
    x0 = x1;
    f0 = f1;
  }
  return total;
}

}  // namespace detail

// First-order interior corrector: homogeneous part plus a Duhamel integral
// whose kernel products are collapsed via rho_+ + rho_- = -mu r^2, so the
// integrand stays explicit and cancellation-free through mu r = 2.
inline double first_order_corrector(double psi0_hat, double psi1_hat,
                                    const ModelParams& p, double r, double t) {
  const double bn = p.bnu();
  const double r2 = r * r;
  const double datum = (1.0 - p.gamma) * (psi1_hat + bn * r2 * psi0_hat);
  ViscoelasticKernel gt = viscoelastic_kernels(bn, r, t);
  double hom = gt.g0 * datum;
  if (t == 0.0) return hom;

  double freq = 2.0 * std::abs(gt.rho_plus.imag());
  auto integrand = [&](double s) {
    ViscoelasticKernel ga = viscoelastic_kernels(bn, r, std::max(0.0, t - s));
    ViscoelasticKernel gb = viscoelastic_kernels(bn, r, s);
    double comb = 0.5 * (gb.g0 + gb.dg1);  // (e^{rho+ s} + e^{rho- s}) / 2
    double d0 = bn * r2 * comb + (0.5 * bn * bn * r2 - 1.0) * r2 * gb.g1;
    return r2 * ga.g1 * (d0 * psi0_hat + gb.g0 * psi1_hat);
  };
  double duh = (1.0 - p.gamma) *
               detail::osc_integrate(integrand, 0.0, t, 1e-10, freq,
                                     "first_order_corrector", r, t);
  return hom + duh;
}

struct ExpansionTerms {
  double r = 0.0;
  double t = 0.0;
  double psi = 0.0;        // full model
  double psi0 = 0.0;       // limit equation
  double corrector = 0.0;  // psi^{I,1}
  double layer = 0.0;      // psi^{L,1} at z = kappa t
  double remainder = 0.0;  // kappa^2 R^kappa, by subtraction
};

inline ExpansionTerms expansion_terms(double psi0_hat, double psi1_hat,
                                      const ModelParams& p, double r,
                                      double t) {
  ExpansionTerms out;
  out.r = r;
  out.t = t;
  double psi2_hat = consistent_third_datum(psi0_hat, psi1_hat, p, r);
  out.psi = evolve_mode(p, {psi0_hat, psi1_hat, psi2_hat}, r, t).psi.real();
  out.psi0 = solve_limit_mode(psi0_hat, psi1_hat, p, r, t).psi;
  out.corrector = first_order_corrector(psi0_hat, psi1_hat, p, r, t);
  out.layer = heat_layer(psi0_hat, psi1_hat, p, r, p.kappa * t);
  out.remainder = out.psi - out.psi0 - p.kappa * out.corrector -
                  p.kappa * out.layer;
  return out;
}

// ---------------------------------------------------------------------------
// Energy certificates for the forced third-order mode equation.
// ---------------------------------------------------------------------------

struct CertificateRow {
  double t = 0.0;
  double f_int = 0.0;  // accumulated int_0^t |f|^2 ds
  double lhs_energy = 0.0;
  double rhs_energy = 0.0;
  double margin_energy = 0.0;
  double lhs_potential = 0.0;
  double rhs_potential = 0.0;
  double margin_potential = 0.0;
};

struct EnergyCertificate {
  double r = 0.0;
  double k1 = 0.5;
  double k2 = 0.0;
  double k3 = 0.0;
  double k5 = 0.0;
  double k5_bound = 0.0;
  bool hypotheses_ok = false;
  std::vector<CertificateRow> rows;
  double min_margin_energy = 0.0;
  double min_margin_potential = 0.0;
};

// Convenience forcing for the vanishing-diffusivity application:
// f = kappa (gamma-1) r^4 psi^{(0)}(s) with psi^{(0)} driven by (psi0, psi1).
inline Forcing limit_source_forcing(const ModelParams& p, double psi0_hat,
                                    double psi1_hat, double r) {
  return [=](double s) -> cplx {
    LimitMode w = solve_limit_mode(psi0_hat, psi1_hat, p, r, s);
    return p.kappa * (p.gamma - 1.0) * r * r * r * r * w.psi;
  };
}

inline EnergyCertificate energy_certificate_check(
    const ModelParams& p, cplx u2, const Forcing& forcing, double r,
    const std::vector<double>& t_grid, double k1 = 0.5) {
  if (!(k1 > 0.0 && k1 < 1.0))
    throw std::invalid_argument("energy_certificate_check: k1 must lie in (0,1)");
  if (!(r > 0.0))
    throw std::invalid_argument("energy_certificate_check: r must be > 0");
  if (!(p.bnu() > 0.0))
    throw std::invalid_argument(
        "energy_certificate_check: the certificate needs a viscous model");
  detail::check_time_grid(t_grid, "energy_certificate_check");

  const double kp = p.kappa, gm = p.gamma, bn = p.bnu(), gt = p.gamma_tilde();
  const double r2 = r * r, r4 = r2 * r2;

  EnergyCertificate out;
  out.r = r;
  out.k1 = k1;
  out.k2 = kp * kp * (1.0 + k1 * gm) * (1.0 + k1 * gm) * r4 * r2 /
           (1.0 - k1 + 2.0 * gt * r2);
  out.k3 = (1.0 - k1 + 2.0 * gt * r2) / (kp * (1.0 + k1 * gm) * r2);
  out.k5 = kp * bn * r2 + k1 * (1.0 - k1 + gt * r2) -
           kp * kp * (1.0 + k1 * gm) * (1.0 + k1 * gm) * r2 /
               (1.0 - k1 + 2.0 * gt * r2);
  out.k5_bound = k1 * (1.0 - k1) * (1.0 - k1) / (1.0 - k1 + 2.0 * gt * r2);
  out.hypotheses_ok =
      bn * (1.0 - k1) >= kp * (1.0 + k1 * gm) &&
      (1.0 - k1) * (kp * bn + 3.0 * k1 * gt) >=
          kp * kp * (1.0 + k1 * gm) * (1.0 + k1 * gm) &&
      out.k5 >= out.k5_bound * (1.0 - 1e-12);

  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  bool has_zero = grid.front() == 0.0;
  std::vector<double> oracle_grid = grid;
  if (!has_zero) oracle_grid.insert(oracle_grid.begin(), 0.0);
  auto traj = ode_oracle(p, {cplx(0.0), cplx(0.0), u2}, forcing, r, oracle_grid);

  // multiplier coefficients of the proof-form inequalities
  const double k3a = kp * (1.0 + k1 * gm) /
                     (kp * bn * r2 + k1 * (1.0 - k1 + gt * r2));
  const double coefv = k1 * (1.0 - k1) * (1.0 - k1) * r2 /
                       ((kp * bn + k1 * gt) * r2 + k1 * (1.0 - k1));
  const double cf = (2.0 + gm * k1) / (2.0 * kp * gm * r2);
  const double cpot = (1.0 - k1 + 2.0 * gt * r2) /
                      (k1 * (1.0 - k1) * (1.0 - k1) * r4);
  double freq = 2.0 * r;  // |f|^2 beats at twice the mode frequency

  out.rows.reserve(grid.size());
  double f_acc = 0.0;
  double prev_t = 0.0;
  out.min_margin_energy = std::numeric_limits<double>::infinity();
  out.min_margin_potential = out.min_margin_energy;
  for (std::size_t i = 0; i < oracle_grid.size(); ++i) {
    double t = oracle_grid[i];
    f_acc += detail::osc_integrate(
        [&](double s) { return std::norm(forcing(s)); }, prev_t, t, 1e-13,
        freq, "energy_certificate_check", r, t);
    prev_t = t;
    if (!has_zero && i == 0) continue;

    const ModeState& s = traj[i];
    CertificateRow row;
    row.t = t;
    row.f_int = f_acc;
    cplx combo = s.psi_tt + bn * r2 * s.psi_t + k1 * r2 * s.psi;
    cplx pair = s.psi + k3a * s.psi_t;
    row.lhs_energy = std::norm(combo) +
                     k1 * (1.0 - k1) * r4 * std::norm(pair) +
                     coefv * std::norm(s.psi_t);
    row.rhs_energy = std::norm(u2) + cf * f_acc;
    row.margin_energy = row.rhs_energy - row.lhs_energy;
    row.lhs_potential = std::norm(s.psi);
    row.rhs_potential = cpot * (std::norm(u2) + cf * f_acc);
    row.margin_potential = row.rhs_potential - row.lhs_potential;
    out.min_margin_energy = std::min(out.min_margin_energy, row.margin_energy);
    out.min_margin_potential =
        std::min(out.min_margin_potential, row.margin_potential);
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate studies in the diffusivity and in the viscosity.
// ---------------------------------------------------------------------------

namespace detail {

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

inline LogFit loglog_fit(const std::vector<std::pair<double, double>>& s,
                         const char* who) {
  if (s.size() < 2)
    throw std::invalid_argument(std::string(who) + ": need at least 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : s) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::invalid_argument(std::string(who) +
                                  ": samples must be positive");
    double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(s.size());
  LogFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (const auto& [x, y] : s) {
    double e = std::log(y) - f.slope * std::log(x) - f.intercept;
    ss += e * e;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

inline std::vector<double> study_time_grid() {
  std::vector<double> g{0.0};
  for (double t : log_spaced(1e-2, 1e3, 40)) g.push_back(t);
  return g;
}

inline std::vector<double> study_time_extension() {
  std::vector<double> g = log_spaced(1e3, 1e4, 13);
  g.erase(g.begin());  // 1e3 already present
  return g;
}

inline void check_sweep(const std::vector<double>& sweep, const char* who) {
  std::vector<double> pos;
  for (double k : sweep) {
    if (k < 0.0)
      throw std::invalid_argument(std::string(who) +
                                  ": sweep values must be >= 0");
    if (k > 0.0) pos.push_back(k);
  }
  if (pos.size() < 3)
    throw std::invalid_argument(std::string(who) +
                                ": need at least 3 positive sweep values");
  auto [lo, hi] = std::minmax_element(pos.begin(), pos.end());
  if (*hi < *lo * 100.0 * (1.0 - 1e-9))
    throw std::invalid_argument(std::string(who) +
                                ": sweep must span at least two decades");
}

inline void check_consistent_data(const GaussianData& d, int n,
                                  const char* who) {
  if (d.n != n)
    throw std::invalid_argument(std::string(who) +
                                ": data dimension does not match n");
  if (d.g[2].a != 0.0 || d.g2b.a != 0.0)
    throw std::invalid_argument(
        std::string(who) +
        ": the third datum is fixed by the consistency condition; supply "
        "zero psi2 components");
}

}  // namespace detail

struct RateRow {
  double kappa = 0.0;
  double l2_u = 0.0;       // sup_t ||u|| / G1(1+t)
  double l2_ut = 0.0;      // sup_t ||u_t||
  double l2_energy = 0.0;  // sup_t ||u_tt - b nu Lap u_t - Lap u / 2||
  double linf_u = 0.0;     // Fourier-side L1 surrogates of the same three
  double linf_ut = 0.0;
  double linf_energy = 0.0;
  double t_at_max = 0.0;  // argmax of the l2_u study
};

struct RateStudy {
  std::vector<RateRow> rows;
  double slope_l2 = 0.0;
  double slope_ut = 0.0;
  double slope_energy = 0.0;
  double slope_linf_u = 0.0;
  double slope_linf_ut = 0.0;
  double slope_linf_energy = 0.0;
  double rms_l2 = 0.0;
  bool trivial_data = false;
  bool maximizer_interior = true;
  bool extended = false;
  std::vector<double> t_grid;
};

namespace detail {

struct ErrorNorms {
  double l2_u = 0.0, l2_ut = 0.0, l2_energy = 0.0;
  double linf_u = 0.0, linf_ut = 0.0, linf_energy = 0.0;
};

// One time slice of the first-order difference u = psi - psi^{(0)} with the
// consistent third datum; L2 and Fourier-L1 norms in one sweep of the grid.
inline ErrorNorms first_order_slice(const GaussianData& d,
                                    const ModelParams& p, double t) {
  int n = d.n;
  RadialGrid g = RadialGrid::time_adapted(n, t, 0.25 * p.bnu());
  const double bn = p.bnu();
  double s_u = 0, s_ut = 0, s_en = 0, l_u = 0, l_ut = 0, l_en = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double r = g.nodes[i];
    double h0 = d.hat(0, r), h1 = d.hat(1, r);
    double h2 = consistent_third_datum(h0, h1, p, r);
    ModeState s = evolve_mode(p, {h0, h1, h2}, r, t);
    LimitMode w = solve_limit_mode(h0, h1, p, r, t);
    double r2 = r * r;
    double u = s.psi.real() - w.psi;
    double ut = s.psi_t.real() - w.psi_t;
    double wtt = -bn * r2 * w.psi_t - r2 * w.psi;
    double utt = s.psi_tt.real() - wtt;
    double en = utt + bn * r2 * ut + 0.5 * r2 * u;
    double wgt = g.weights[i] * std::pow(r, n - 1);
    s_u += wgt * u * u;
    s_ut += wgt * ut * ut;
    s_en += wgt * en * en;
    l_u += wgt * std::abs(u);
    l_ut += wgt * std::abs(ut);
    l_en += wgt * std::abs(en);
  }
  double om = g.omega();
  double hy = std::pow(2.0 * detail::pi, -0.5 * n) * om;
  return {std::sqrt(om * s_u), std::sqrt(om * s_ut), std::sqrt(om * s_en),
          hy * l_u, hy * l_ut, hy * l_en};
}

}  // namespace detail

inline RateStudy first_order_rate_study(const GaussianData& d,
                                        const ModelParams& params_base, int n,
                                        const std::vector<double>& kappa_list,
                                        std::vector<double> t_grid = {}) {
  detail::check_consistent_data(d, n, "first_order_rate_study");
  detail::check_sweep(kappa_list, "first_order_rate_study");
  if (params_base.inviscid || !(params_base.bnu() > 0.0))
    throw std::invalid_argument("first_order_rate_study: base model must be viscous");
  RateStudy out;
  out.t_grid = t_grid.empty() ? detail::study_time_grid() : std::move(t_grid);
  out.trivial_data = d.g[0].a == 0.0 && d.g[1].a == 0.0;

  bool tried_extension = false;
  for (;;) {
    out.rows.clear();
    out.maximizer_interior = true;
    for (double kp : kappa_list) {
      if (!(kp > 0.0)) continue;
      ModelParams p = params_base;
      p.kappa = kp;
      RateRow row;
      row.kappa = kp;
      std::vector<detail::ErrorNorms> slices(out.t_grid.size());
      detail::parallel_for(out.t_grid.size(), [&](std::size_t i) {
        if (out.t_grid[i] > 0.0)
          slices[i] = detail::first_order_slice(d, p, out.t_grid[i]);
      });
      std::size_t arg = 0;
      for (std::size_t i = 0; i < slices.size(); ++i) {
        double gl = growth_G1(n, 1.0 + out.t_grid[i]);
        double v = slices[i].l2_u / gl;
        if (v > row.l2_u) {
          row.l2_u = v;
          arg = i;
        }
        row.l2_ut = std::max(row.l2_ut, slices[i].l2_ut);
        row.l2_energy = std::max(row.l2_energy, slices[i].l2_energy);
        row.linf_u = std::max(row.linf_u, slices[i].linf_u);
        row.linf_ut = std::max(row.linf_ut, slices[i].linf_ut);
        row.linf_energy = std::max(row.linf_energy, slices[i].linf_energy);
      }
      row.t_at_max = out.t_grid[arg];
      if (arg + 1 >= out.t_grid.size() || arg == 0)
        out.maximizer_interior = false;
      out.rows.push_back(row);
    }
    if (out.trivial_data || out.maximizer_interior || tried_extension) break;
    for (double t : detail::study_time_extension()) out.t_grid.push_back(t);
    tried_extension = true;
    out.extended = true;
  }

  if (!out.trivial_data) {
    auto fit = [&](double RateRow::* field) {
      std::vector<std::pair<double, double>> s;
      for (const auto& row : out.rows) s.emplace_back(row.kappa, row.*field);
      return detail::loglog_fit(s, "first_order_rate_study");
    };
    detail::LogFit f = fit(&RateRow::l2_u);
    out.slope_l2 = f.slope;
    out.rms_l2 = f.rms;
    out.slope_ut = fit(&RateRow::l2_ut).slope;
    out.slope_energy = fit(&RateRow::l2_energy).slope;
    out.slope_linf_u = fit(&RateRow::linf_u).slope;
    out.slope_linf_ut = fit(&RateRow::linf_ut).slope;
    out.slope_linf_energy = fit(&RateRow::linf_energy).slope;
  }
  return out;
}

struct SecondOrderRow {
  double kappa = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double first_l2 = 0.0;  // first-order error on the same grid
  double ratio = 0.0;     // l2 / first_l2
  double t_at_max = 0.0;
};

struct SecondOrderStudy {
  std::vector<SecondOrderRow> rows;
  double slope_l2 = 0.0;
  double slope_linf = 0.0;
  double slope_ratio = 0.0;
  bool trivial_data = false;
  bool maximizer_interior = true;
  bool extended = false;
  std::vector<double> t_grid;
};

inline SecondOrderStudy second_order_rate_study(
    const GaussianData& d, const ModelParams& params_base, int n,
    const std::vector<double>& kappa_list, std::vector<double> t_grid = {}) {
  detail::check_consistent_data(d, n, "second_order_rate_study");
  detail::check_sweep(kappa_list, "second_order_rate_study");
  if (n < 2)
    throw std::invalid_argument(
        "second_order_rate_study: the refined estimates need n >= 2");
  if (params_base.inviscid || !(params_base.bnu() > 0.0))
    throw std::invalid_argument("second_order_rate_study: base model must be viscous");
  SecondOrderStudy out;
  out.t_grid = t_grid.empty() ? detail::study_time_grid() : std::move(t_grid);
  out.trivial_data = d.g[0].a == 0.0 && d.g[1].a == 0.0;

  bool tried_extension = false;
  for (;;) {
    out.rows.clear();
    out.maximizer_interior = true;
    for (double kp : kappa_list) {
      if (!(kp > 0.0)) continue;
      ModelParams p = params_base;
      p.kappa = kp;
      SecondOrderRow row;
      row.kappa = kp;
      struct Slice {
        double l2 = 0.0, linf = 0.0, first = 0.0;
      };
      std::vector<Slice> slices(out.t_grid.size());
      detail::parallel_for(out.t_grid.size(), [&](std::size_t i) {
        double t = out.t_grid[i];
        if (!(t > 0.0)) return;
        RadialGrid g = RadialGrid::time_adapted(n, t, 0.25 * p.bnu());
        double s2 = 0, l1 = 0, s1 = 0;
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
          double r = g.nodes[j];
          ExpansionTerms e =
              expansion_terms(d.hat(0, r), d.hat(1, r), p, r, t);
          double wgt = g.weights[j] * std::pow(r, n - 1);
          s2 += wgt * e.remainder * e.remainder;
          l1 += wgt * std::abs(e.remainder);
          double u = e.psi - e.psi0;
          s1 += wgt * u * u;
        }
        double om = g.omega();
        slices[i].l2 = std::sqrt(om * s2);
        slices[i].linf = std::pow(2.0 * detail::pi, -0.5 * n) * om * l1;
        slices[i].first = std::sqrt(om * s1);
      });
      std::size_t arg = 0;
      for (std::size_t i = 0; i < slices.size(); ++i) {
        if (slices[i].l2 > row.l2) {
          row.l2 = slices[i].l2;
          arg = i;
        }
        row.linf = std::max(row.linf, slices[i].linf);
        row.first_l2 = std::max(row.first_l2, slices[i].first);
      }
      row.t_at_max = out.t_grid[arg];
      row.ratio = row.first_l2 > 0.0 ? row.l2 / row.first_l2 : 0.0;
      if (arg + 1 >= out.t_grid.size() || arg == 0)
        out.maximizer_interior = false;
      out.rows.push_back(row);
    }
    if (out.trivial_data || out.maximizer_interior || tried_extension) break;
    for (double t : detail::study_time_extension()) out.t_grid.push_back(t);
    tried_extension = true;
    out.extended = true;
  }

  if (!out.trivial_data) {
    auto collect = [&](double SecondOrderRow::* field) {
      std::vector<std::pair<double, double>> s;
      for (const auto& row : out.rows) s.emplace_back(row.kappa, row.*field);
      return detail::loglog_fit(s, "second_order_rate_study");
    };
    out.slope_l2 = collect(&SecondOrderRow::l2).slope;
    out.slope_linf = collect(&SecondOrderRow::linf).slope;
    out.slope_ratio = collect(&SecondOrderRow::ratio).slope;
  }
  return out;
}

struct ViscousRow {
  double epsbar = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double t_at_max = 0.0;
};

struct ViscousStudy {
  std::vector<ViscousRow> rows;
  double slope_l2 = 0.0;
  double slope_linf = 0.0;
  bool monotone = true;
  bool trivial_data = false;
  bool maximizer_interior = true;
  bool extended = false;
  std::vector<double> t_grid;
};

inline ViscousStudy viscous_limit_study(const GaussianData& d,
                                        const ModelParams& params_base, int n,
                                        const std::vector<double>& epsbar_list,
                                        std::vector<double> t_grid = {}) {
  if (d.n != n)
    throw std::invalid_argument(
        "viscous_limit_study: data dimension does not match n");
  detail::check_sweep(epsbar_list, "viscous_limit_study");
  ViscousStudy out;
  out.t_grid = t_grid.empty() ? detail::study_time_grid() : std::move(t_grid);
  out.trivial_data =
      d.g[0].a == 0.0 && d.g[1].a == 0.0 && d.g[2].a == 0.0 && d.g2b.a == 0.0;

  ModelParams p_inv = derive_params(params_base.kappa, params_base.b,
                                    params_base.nu, params_base.gamma,
                                    params_base.c0, true);
  double c_env = 0.25 * 0.5 * (params_base.gamma - 1.0) * params_base.kappa;

  bool tried_extension = false;
  for (;;) {
    out.rows.clear();
    out.maximizer_interior = true;
    for (double eb : epsbar_list) {
      ModelParams p = eb > 0.0
                          ? derive_params(params_base.kappa, eb, 1.0,
                                          params_base.gamma, params_base.c0,
                                          false)
                          : p_inv;
      ViscousRow row;
      row.epsbar = eb;
      struct Slice {
        double l2 = 0.0, linf = 0.0;
      };
      std::vector<Slice> slices(out.t_grid.size());
      detail::parallel_for(out.t_grid.size(), [&](std::size_t i) {
        double t = out.t_grid[i];
        if (!(t > 0.0)) return;
        RadialGrid g = RadialGrid::time_adapted(n, t, c_env);
        double s2 = 0, l1 = 0;
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
          double r = g.nodes[j];
          std::array<cplx, 3> data = {d.hat(0, r), d.hat(1, r), d.hat(2, r)};
          double u = evolve_mode(p, data, r, t).psi.real() -
                     evolve_mode(p_inv, data, r, t).psi.real();
          double wgt = g.weights[j] * std::pow(r, n - 1);
          s2 += wgt * u * u;
          l1 += wgt * std::abs(u);
        }
        double om = g.omega();
        slices[i].l2 = std::sqrt(om * s2);
        slices[i].linf = std::pow(2.0 * detail::pi, -0.5 * n) * om * l1;
      });
      std::size_t arg = 0;
      for (std::size_t i = 0; i < slices.size(); ++i) {
        if (slices[i].l2 > row.l2) {
          row.l2 = slices[i].l2;
          arg = i;
        }
        row.linf = std::max(row.linf, slices[i].linf);
      }
      row.t_at_max = out.t_grid[arg];
      if (eb > 0.0 && (arg + 1 >= out.t_grid.size() || arg == 0))
        out.maximizer_interior = false;
      out.rows.push_back(row);
    }
    if (out.trivial_data || out.maximizer_interior || tried_extension) break;
    for (double t : detail::study_time_extension()) out.t_grid.push_back(t);
    tried_extension = true;
    out.extended = true;
  }

  if (!out.trivial_data) {
    std::vector<std::pair<double, double>> s2, sl;
    for (const auto& row : out.rows)
      if (row.epsbar > 0.0) {
        s2.emplace_back(row.epsbar, row.l2);
        sl.emplace_back(row.epsbar, row.linf);
      }
    out.slope_l2 = detail::loglog_fit(s2, "viscous_limit_study").slope;
    out.slope_linf = detail::loglog_fit(sl, "viscous_limit_study").slope;
    std::sort(s2.begin(), s2.end());
    for (std::size_t i = 1; i < s2.size(); ++i)
      if (!(s2[i].second > s2[i - 1].second)) out.monotone = false;
  }
  return out;
}

// Fourier-side weighted L1 data norm <r>^s |psi_j^hat|, the quantity the
// L-infinity corollaries actually consume.
inline double hat_weighted_l1(const GaussianData& d, int j, double s,
                              const RadialGrid& g) {
  if (j < 0 || j > 2)
    throw std::invalid_argument("hat_weighted_l1: j must be 0, 1, or 2");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double r = g.nodes[i];
    acc += g.weights[i] * std::pow(r, d.n - 1) *
           std::pow(1.0 + r * r, 0.5 * s) * std::abs(d.hat(j, r));
  }
  return d.omega() * acc;
}

// Closed form of int r^s |a sigma^n e^{-sigma^2 r^2/2}| dxi; the s=0 case is
// the plain Fourier-side L1 norm.
inline double hat_power_l1_closed(double a, double sigma, int n, double s) {
  if (!(sigma > 0.0) || n < 1 || s < 0.0)
    throw std::invalid_argument("hat_power_l1_closed: bad arguments");
  return std::abs(a) * unit_sphere_measure(n) *
         std::pow(2.0, 0.5 * (s + n) - 1.0) * std::tgamma(0.5 * (s + n)) /
         std::pow(sigma, s);
}

}  // namespace blackstock
