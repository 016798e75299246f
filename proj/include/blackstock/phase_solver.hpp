#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <vector>

#include "detail/expm.hpp"
#include "model.hpp"

namespace blackstock {

enum class SourceMethod { closed_form, ode_fallback };

struct KernelTriple {
  double r = 0.0;
  double t = 0.0;
  std::array<cplx, 3> k{};    // K0, K1, K2
  std::array<cplx, 3> kt{};   // first time derivatives
  std::array<cplx, 3> ktt{};  // second time derivatives
  SourceMethod source_method = SourceMethod::closed_form;
};

struct ProfileTriple {
  double r = 0.0;
  double t = 0.0;
  double j0 = 1.0;
  double j1 = 0.0;
  double j2 = 0.0;
  // set when the values are the r->0 limits (1, t, (delta/2-kappa)t + t^2/4)
  bool r0_limit = false;
};

struct ViscoelasticKernel {
  double mu = 0.0;
  double r = 0.0;
  double t = 0.0;
  double g0 = 1.0;
  double g1 = 0.0;
  double dg0 = 0.0;
  double dg1 = 1.0;
  cplx rho_plus{};
  cplx rho_minus{};
};

struct ModeState {
  cplx psi{};
  cplx psi_t{};
  cplx psi_tt{};
};

namespace detail {

// Exponential remainders R0 = e^z-1, R1 = e^z-1-z, R2 = e^z-1-z-z^2/2.
// The series branch keeps the partial-fraction kernel assembly exact at t=0
// and cancellation-free while |lambda| t is small.
struct rem_exp {
  cplx r0, r1, r2;
};

inline rem_exp rem_exp_at(cplx z) {
  rem_exp out;
  if (std::abs(z) <= 0.7) {
    cplx term = z * z * z / 6.0;
    cplx sum = term;
    for (int n = 4; n <= 24; ++n) {
      term *= z / static_cast<double>(n);
      sum += term;
    }
    out.r2 = sum;
    out.r1 = sum + 0.5 * z * z;
    out.r0 = out.r1 + z;
  } else {
    cplx w = std::exp(z);
    out.r0 = w - 1.0;
    out.r1 = out.r0 - z;
    out.r2 = out.r1 - 0.5 * z * z;
  }
  return out;
}

// Companion matrix of the mode cubic: state (psi, psi_t, psi_tt).
inline smat mode_matrix(double a0, double a1, double a2) {
  smat A = smat_zero(3);
  A(0, 1) = 1.0;
  A(1, 2) = 1.0;
  A(2, 0) = -a0;
  A(2, 1) = -a1;
  A(2, 2) = -a2;
  return A;
}

inline smat mode_matrix(const ModelParams& p, double r) {
  double r2 = r * r;
  return mode_matrix(p.kappa * r2 * r2, (1.0 + p.gamma_tilde() * r2) * r2,
                     (p.delta() + p.kappa) * r2);
}

// Vieta reconstruction; imaginary parts cancel by conjugate closure.
inline smat mode_matrix_from_roots(const CharacteristicRoots& cr) {
  cplx l0 = cr.root_full(0), l1 = cr.root_full(1), l2 = cr.root_full(2);
  return mode_matrix(-(l0 * l1 * l2).real(),
                     (l0 * l1 + l0 * l2 + l1 * l2).real(),
                     -(l0 + l1 + l2).real());
}

}  // namespace detail

inline KernelTriple kernels_at(const CharacteristicRoots& roots, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("kernels_at: t must be >= 0");
  KernelTriple out;
  out.r = roots.r;
  out.t = t;

  if (roots.near_degenerate) {
    // The Vandermonde denominators are ill-conditioned; propagate the
    // companion system with the exact matrix exponential instead.
    detail::smat E = detail::expm(t * detail::mode_matrix_from_roots(roots));
    for (int j = 0; j < 3; ++j) {
      out.k[j] = E(0, j);
      out.kt[j] = E(1, j);
      out.ktt[j] = E(2, j);
    }
    out.source_method = SourceMethod::ode_fallback;
    return out;
  }

  const std::array<cplx, 3> l = {roots.root_full(0), roots.root_full(1),
                                 roots.root_full(2)};
  const double lmax =
      std::max({std::abs(l[0]), std::abs(l[1]), std::abs(l[2])});
  // Below the threshold, split off the polynomial part (exactly the t=0
  // identity pattern plus its t, t^2/2 continuation) and sum only remainder
  // exponentials: the partial-fraction identities sum(l^m pi/D) etc. hold
  // analytically, so no large-term cancellation is left in double precision.
  const bool series = lmax * t <= 0.5;

  // Contribution of root k to (K0,K1,K2, K0',K1',K2', K0'',K1'',K2'').
  auto part = [&](int kk) {
    int a = (kk + 1) % 3, c = (kk + 2) % 3;
    cplx D = (l[kk] - l[a]) * (l[kk] - l[c]);
    cplx b0 = l[a] * l[c] / D;
    cplx b1 = -(l[a] + l[c]) / D;
    cplx b2 = 1.0 / D;
    cplx f0, f1, f2;
    if (series) {
      detail::rem_exp R = detail::rem_exp_at(l[kk] * t);
      f0 = R.r2;
      f1 = l[kk] * R.r1;
      f2 = l[kk] * l[kk] * R.r0;
    } else {
      cplx w = std::exp(l[kk] * t);
      f0 = w;
      f1 = l[kk] * w;
      f2 = l[kk] * l[kk] * w;
    }
    return std::array<cplx, 9>{f0 * b0, f0 * b1, f0 * b2, f1 * b0, f1 * b1,
                               f1 * b2, f2 * b0, f2 * b1, f2 * b2};
  };

  std::array<double, 9> acc{};
  if (roots.conjugate_pair) {
    auto p0 = part(0);
    auto p2 = part(2);
    for (int i = 0; i < 9; ++i) acc[i] = 2.0 * p0[i].real() + p2[i].real();
  } else {
    auto p0 = part(0);
    auto p1 = part(1);
    auto p2 = part(2);
    for (int i = 0; i < 9; ++i)
      acc[i] = p0[i].real() + p1[i].real() + p2[i].real();
  }
  if (series) {
    acc[0] += 1.0;
    acc[1] += t;
    acc[2] += 0.5 * t * t;
    acc[4] += 1.0;
    acc[5] += t;
    acc[8] += 1.0;
  }
  out.k = {acc[0], acc[1], acc[2]};
  out.kt = {acc[3], acc[4], acc[5]};
  out.ktt = {acc[6], acc[7], acc[8]};
  return out;
}

inline ModeState evolve_mode(const ModelParams& p,
                             const std::array<cplx, 3>& data, double r,
                             double t) {
  KernelTriple K = kernels_at(characteristic_roots(p, r), t);
  ModeState s;
  for (int j = 0; j < 3; ++j) {
    s.psi += K.k[j] * data[j];
    s.psi_t += K.kt[j] * data[j];
    s.psi_tt += K.ktt[j] * data[j];
  }
  return s;
}

using Forcing = std::function<cplx(double)>;

namespace detail {

inline std::array<double, 3> apply3(const smat& E,
                                    const std::array<double, 3>& y) {
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i)
    out[i] = E(i, 0) * y[0] + E(i, 1) * y[1] + E(i, 2) * y[2];
  return out;
}

// One exponential-integrator step of length h from t0: the forcing is
// interpolated by the cubic through four uniform nodes and folded into the
// exact flow via the augmented-matrix phi-function construction, so the
// linear (stiff) part is propagated exactly at any step size.
inline void forced_step(const smat& A, double t0, double h,
                        const Forcing& forcing, std::array<double, 3>& yre,
                        std::array<double, 3>& yim) {
  if (!forcing) {
    smat E = expm(h * A);
    yre = apply3(E, yre);
    yim = apply3(E, yim);
    return;
  }
  cplx g0 = forcing(t0);
  cplx g1 = forcing(t0 + h / 3.0);
  cplx g2 = forcing(t0 + 2.0 * h / 3.0);
  cplx g3 = forcing(t0 + h);
  // forward differences -> monomial coefficients in theta = s/h
  cplx d1 = g1 - g0, d2 = g2 - 2.0 * g1 + g0, d3 = g3 - 3.0 * g2 + 3.0 * g1 - g0;
  cplx q1 = 3.0 * d1 - 1.5 * d2 + d3;
  cplx q2 = 4.5 * d2 - 4.5 * d3;
  cplx q3 = 4.5 * d3;
  // Taylor coefficients u_j of g(s) = sum u_j s^j / j! on the substep
  std::array<cplx, 4> u = {g0, q1 / h, 2.0 * q2 / (h * h),
                           6.0 * q3 / (h * h * h)};
  for (int pass = 0; pass < 2; ++pass) {
    smat W = smat_zero(7);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) W(i, j) = A(i, j);
    // column 3+k-1 holds u_{4-k}; the forcing enters the third state slot
    for (int kcol = 1; kcol <= 4; ++kcol)
      W(2, 2 + kcol) =
          (pass == 0) ? u[4 - kcol].real() : u[4 - kcol].imag();
    W(3, 4) = 1.0;
    W(4, 5) = 1.0;
    W(5, 6) = 1.0;
    smat M = expm(h * W);
    std::array<double, 3>& y = (pass == 0) ? yre : yim;
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i)
      out[i] = M(i, 0) * y[0] + M(i, 1) * y[1] + M(i, 2) * y[2] + M(i, 6);
    y = out;
  }
}

inline void oracle_advance(const smat& A, double t0, double t1,
                           const Forcing& forcing, std::array<double, 3>& yre,
                           std::array<double, 3>& yim, double rtol, double atol,
                           double r, int depth) {
  if (depth > 44) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "ode_oracle: step-size collapse at r=%.6g, t in [%.6g, %.6g]",
                  r, t0, t1);
    throw std::runtime_error(msg);
  }
  double h = t1 - t0;
  std::array<double, 3> fre = yre, fim = yim;
  forced_step(A, t0, h, forcing, fre, fim);
  std::array<double, 3> hre = yre, him = yim;
  forced_step(A, t0, 0.5 * h, forcing, hre, him);
  forced_step(A, t0 + 0.5 * h, 0.5 * h, forcing, hre, him);
  bool ok = true;
  for (int i = 0; i < 3 && ok; ++i) {
    double tr = atol + rtol * std::max(std::abs(hre[i]), std::abs(fre[i]));
    double ti = atol + rtol * std::max(std::abs(him[i]), std::abs(fim[i]));
    ok = std::abs(hre[i] - fre[i]) <= tr && std::abs(him[i] - fim[i]) <= ti;
  }
  if (ok) {
    // accept the fine solution with one Richardson refinement (local order 5)
    for (int i = 0; i < 3; ++i) {
      yre[i] = hre[i] + (hre[i] - fre[i]) / 15.0;
      yim[i] = him[i] + (him[i] - fim[i]) / 15.0;
    }
    return;
  }
  double tm = t0 + 0.5 * h;
  oracle_advance(A, t0, tm, forcing, yre, yim, rtol, atol, r, depth + 1);
  oracle_advance(A, tm, t1, forcing, yre, yim, rtol, atol, r, depth + 1);
}

}  // namespace detail

// Ground-truth integrator for the (possibly forced) third-order mode
// equation, independent of the root solver: the companion matrix is built
// straight from the model coefficients and every step applies an exact
// matrix exponential, so arbitrarily stiff modes are unconditionally stable.
inline std::vector<ModeState> ode_oracle(const ModelParams& p,
                                         const std::array<cplx, 3>& data,
                                         const Forcing& forcing, double r,
                                         const std::vector<double>& t_grid,
                                         double rtol = 1e-10,
                                         double atol = 1e-12) {
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw std::invalid_argument("ode_oracle: t_grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("ode_oracle: t_grid must be increasing");

  detail::smat A = detail::mode_matrix(p, r);
  std::array<double, 3> yre = {data[0].real(), data[1].real(), data[2].real()};
  std::array<double, 3> yim = {data[0].imag(), data[1].imag(), data[2].imag()};
  std::vector<ModeState> traj(t_grid.size());
  traj[0] = {data[0], data[1], data[2]};
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    detail::oracle_advance(A, t_grid[i - 1], t_grid[i], forcing, yre, yim,
                           rtol, atol, r, 0);
    traj[i] = {cplx(yre[0], yim[0]), cplx(yre[1], yim[1]),
               cplx(yre[2], yim[2])};
  }
  return traj;
}

inline ProfileTriple profiles_at(const ModelParams& p, double r, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("profiles_at: t must be >= 0");
  if (!(r > 0.0))
    throw std::invalid_argument(
        "profiles_at: r must be > 0 (J2 is singular at r=0; its limit "
        "(delta/2-kappa)t + t^2/2 is provided by profiles_r0_limit)");
  ProfileTriple out;
  out.r = r;
  out.t = t;
  const double r2 = r * r;
  const double half_delta = 0.5 * p.delta();
  const double eh = std::exp(-p.kappa * r2 * t);   // heat factor
  const double ed = std::exp(-half_delta * r2 * t);  // wave-damping factor
  out.j0 = eh;
  out.j1 = std::sin(r * t) / r * ed;
  // regrouped J2 via 1 - cos(rt) = 2 sin^2(rt/2): both pieces vanish at
  // t=0 and stay cancellation-safe
  const double x = (p.kappa - half_delta) * r2 * t;
  double head = (x <= 0.5) ? -std::expm1(x) * eh : eh - ed;
  double s = std::sin(0.5 * r * t);
  out.j2 = head / r2 + 2.0 * s * s * ed / r2;
  return out;
}

inline ProfileTriple profiles_r0_limit(const ModelParams& p, double t) {
  if (!(t >= 0.0))
    throw std::invalid_argument("profiles_r0_limit: t must be >= 0");
  ProfileTriple out;
  out.r = 0.0;
  out.t = t;
  out.j0 = 1.0;
  out.j1 = t;
  out.j2 = (0.5 * p.delta() - p.kappa) * t + 0.5 * t * t;
  out.r0_limit = true;
  return out;
}

inline ViscoelasticKernel viscoelastic_kernels(double mu, double r, double t) {
  if (!(mu > 0.0))
    throw std::invalid_argument("viscoelastic_kernels: mu must be > 0");
  if (!(r > 0.0))
    throw std::invalid_argument("viscoelastic_kernels: r must be > 0");
  if (!(t >= 0.0))
    throw std::invalid_argument("viscoelastic_kernels: t must be >= 0");
  ViscoelasticKernel out;
  out.mu = mu;
  out.r = r;
  out.t = t;
  const double r2 = r * r;
  const double a = 0.5 * mu * r2;  // rho_pm = -a +- sqrt(wsq)
  const double wsq = 0.25 * r2 * (mu * mu * r2 - 4.0);
  if (wsq >= 0.0) {
    double w = std::sqrt(wsq);
    out.rho_plus = cplx(-a + w, 0.0);
    out.rho_minus = cplx(-a - w, 0.0);
  } else {
    double w = std::sqrt(-wsq);
    out.rho_plus = cplx(-a, w);
    out.rho_minus = cplx(-a, -w);
  }

  const double y = wsq * t * t;
  double comb, g1;  // comb = (e^{rho+ t}+e^{rho- t})/2
  if (std::abs(y) <= 0.25) {
    // unified sin/sinh series in y = wsq t^2; exact confluent limit at
    // mu r = 2 (the t e^{rho t} branch) and smooth through the collision
    double sterm = 1.0, cterm = 1.0, ssum = 1.0, csum = 1.0;
    for (int n = 1; n <= 12; ++n) {
      sterm *= y / static_cast<double>(2 * n * (2 * n + 1));
      cterm *= y / static_cast<double>((2 * n - 1) * 2 * n);
      ssum += sterm;
      csum += cterm;
    }
    double E = std::exp(-a * t);
    g1 = t * ssum * E;
    comb = csum * E;
  } else if (y > 0.0) {
    double w = std::sqrt(wsq);
    double ep = std::exp((-a + w) * t), em = std::exp((-a - w) * t);
    double x = 2.0 * w * t;
    g1 = (x <= 1.0) ? em * std::expm1(x) / (2.0 * w) : (ep - em) / (2.0 * w);
    comb = 0.5 * (ep + em);
  } else {
    double w = std::sqrt(-wsq);
    double E = std::exp(-a * t);
    g1 = std::sin(w * t) / w * E;
    comb = std::cos(w * t) * E;
  }
  out.g1 = g1;
  out.g0 = comb + a * g1;
  out.dg1 = comb - a * g1;
  out.dg0 = -r2 * g1;
  return out;
}

}  // namespace blackstock
