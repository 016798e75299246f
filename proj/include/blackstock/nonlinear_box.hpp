#pragma once

// Pseudo-spectral verification of the nonlinear machinery on a periodic box:
// the quadratic nonlinearity F, exact per-mode linear propagation, the
// Duhamel operator driven by the third-datum kernel, Picard iteration in the
// weighted evolution-space norm, and small-data runs with a norm ledger.
//
// The box is a desk-scale stand-in for free space. Structural claims
// (quadratic scaling, contraction, boundedness) are computable here; the
// free-space polynomial decay table needs a continuum of low frequencies and
// is out of reach on a torus, which the run ledger states instead of faking.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "singular_limits.hpp"

namespace blackstock {

namespace detail {

// One set of FFTW plans and aligned scratch buffers per grid geometry.
// Transforms copy through the private buffers, so a plan pair serves any
// number of fields and the c2r input destruction never touches user data.
struct FftPlans {
  int d = 1;
  int M = 0;
  std::size_t nreal = 0;
  std::size_t nspec = 0;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  FftPlans(int d_, int M_) : d(d_), M(M_) {
    nreal = 1;
    for (int a = 0; a < d; ++a) nreal *= static_cast<std::size_t>(M);
    nspec = nreal / static_cast<std::size_t>(M) *
            static_cast<std::size_t>(M / 2 + 1);
    rbuf = fftw_alloc_real(nreal);
    cbuf = fftw_alloc_complex(nspec);
    if (rbuf == nullptr || cbuf == nullptr)
      throw std::bad_alloc();
    int n[3] = {M, M, M};
    fwd = fftw_plan_dft_r2c(d, n, rbuf, cbuf, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r(d, n, cbuf, rbuf, FFTW_ESTIMATE);
    if (fwd == nullptr || bwd == nullptr)
      throw std::runtime_error("TorusGrid: FFTW plan creation failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (rbuf) fftw_free(rbuf);
    if (cbuf) fftw_free(cbuf);
  }
};

inline bool power_of_two(int m) { return m >= 4 && (m & (m - 1)) == 0; }

}  // namespace detail

// Periodic box [0,L)^d sampled on M points per axis. Spectral arrays use the
// real-to-complex half layout (last axis 0..M/2) and hold Fourier-series
// coefficients: field(x) = sum_k a_k exp(i k.(2pi/L) x), so the forward
// transform carries the 1/M^d normalization and Parseval reads
// integral |f|^2 = L^d sum |a_k|^2 over the full lattice.
struct TorusGrid {
  int d = 1;
  int M = 256;
  double L = 2.0 * detail::pi;
  std::shared_ptr<detail::FftPlans> plans;

  TorusGrid() : TorusGrid(1) {}
  explicit TorusGrid(int d_, int M_ = 0, double L_ = 2.0 * detail::pi) {
    if (d_ < 1 || d_ > 3)
      throw std::invalid_argument("TorusGrid: d must be 1, 2, or 3");
    d = d_;
    M = M_ != 0 ? M_ : (d == 1 ? 256 : d == 2 ? 64 : 32);
    if (!detail::power_of_two(M))
      throw std::invalid_argument("TorusGrid: M must be a power of two >= 4");
    if (!(L_ > 0.0)) throw std::invalid_argument("TorusGrid: L must be > 0");
    L = L_;
    plans = std::make_shared<detail::FftPlans>(d, M);
  }

  std::size_t nreal() const { return plans->nreal; }
  std::size_t nspec() const { return plans->nspec; }

  // Signed integer frequencies of a spectral index; unused axes stay 0.
  // The last axis is the halved one and is always non-negative.
  std::array<int, 3> freq(std::size_t idx) const {
    std::array<int, 3> k{0, 0, 0};
    const int Mh = M / 2 + 1;
    std::size_t rem = idx;
    k[d - 1] = static_cast<int>(rem % static_cast<std::size_t>(Mh));
    rem /= static_cast<std::size_t>(Mh);
    for (int a = d - 2; a >= 0; --a) {
      int i = static_cast<int>(rem % static_cast<std::size_t>(M));
      rem /= static_cast<std::size_t>(M);
      k[a] = i <= M / 2 ? i : i - M;
    }
    return k;
  }

  long long ksq(std::size_t idx) const {
    std::array<int, 3> k = freq(idx);
    return 1LL * k[0] * k[0] + 1LL * k[1] * k[1] + 1LL * k[2] * k[2];
  }

  double r_of(std::size_t idx) const {
    return 2.0 * detail::pi / L * std::sqrt(static_cast<double>(ksq(idx)));
  }

  // 2/3-rule mask: a mode is aliased when any axis carries more than M/3.
  bool aliased(std::size_t idx) const {
    std::array<int, 3> k = freq(idx);
    for (int a = 0; a < d; ++a)
      if (3 * std::abs(k[a]) > M) return true;
    return false;
  }

  // Parseval weight of a stored coefficient: 2 unless the halved axis sits
  // on one of its self-paired planes (0 or M/2).
  double mode_weight(std::size_t idx) const {
    int klast = freq(idx)[d - 1];
    return (klast == 0 || klast == M / 2) ? 1.0 : 2.0;
  }

  // Coordinates of a real-space sample (row-major layout).
  std::array<double, 3> point(std::size_t idx) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    std::size_t rem = idx;
    for (int a = d - 1; a >= 0; --a) {
      x[a] = L / M * static_cast<double>(rem % static_cast<std::size_t>(M));
      rem /= static_cast<std::size_t>(M);
    }
    return x;
  }

  std::vector<double> to_real(const std::vector<cplx>& spec) const {
    if (spec.size() != nspec())
      throw std::invalid_argument("TorusGrid: spectral size mismatch");
    std::copy(spec.begin(), spec.end(),
              reinterpret_cast<cplx*>(plans->cbuf));
    fftw_execute(plans->bwd);
    return std::vector<double>(plans->rbuf, plans->rbuf + nreal());
  }

  std::vector<cplx> to_spectral(const std::vector<double>& field) const {
    if (field.size() != nreal())
      throw std::invalid_argument("TorusGrid: real size mismatch");
    std::copy(field.begin(), field.end(), plans->rbuf);
    fftw_execute(plans->fwd);
    const cplx* src = reinterpret_cast<const cplx*>(plans->cbuf);
    std::vector<cplx> out(src, src + nspec());
    const double scale = 1.0 / static_cast<double>(nreal());
    for (cplx& a : out) a *= scale;
    return out;
  }

  void dealias(std::vector<cplx>& spec) const {
    if (spec.size() != nspec())
      throw std::invalid_argument("TorusGrid: spectral size mismatch");
    for (std::size_t i = 0; i < spec.size(); ++i)
      if (aliased(i)) spec[i] = 0.0;
  }
};

// L^2 over the box (full-lattice Parseval through the stored half).
inline double box_l2(const TorusGrid& g, const std::vector<cplx>& a) {
  if (a.size() != g.nspec())
    throw std::invalid_argument("box_l2: spectral size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += g.mode_weight(i) * std::norm(a[i]);
  return std::sqrt(std::pow(g.L, g.d) * acc);
}

// Inhomogeneous Sobolev norm with weight (1+r^2)^m.
inline double box_sobolev(const TorusGrid& g, const std::vector<cplx>& a,
                          double m) {
  if (a.size() != g.nspec())
    throw std::invalid_argument("box_sobolev: spectral size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r = g.r_of(i);
    acc += g.mode_weight(i) * std::pow(1.0 + r * r, m) * std::norm(a[i]);
  }
  return std::sqrt(std::pow(g.L, g.d) * acc);
}

// Homogeneous norm |D|^m: weight r^{2m}, mean mode excluded for m > 0.
inline double box_homogeneous_sobolev(const TorusGrid& g,
                                      const std::vector<cplx>& a, double m) {
  if (a.size() != g.nspec())
    throw std::invalid_argument(
        "box_homogeneous_sobolev: spectral size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r = g.r_of(i);
    acc += g.mode_weight(i) * std::pow(r * r, m) * std::norm(a[i]);
  }
  return std::sqrt(std::pow(g.L, g.d) * acc);
}

// Spectral snapshot of (psi, psi_t, psi_tt) at time t, with lazily
// transformed real-space mirrors. Mutating the spectra in place requires
// invalidate_real_cache(); the stepping operators always build fresh states.
struct NonlinearState {
  TorusGrid grid;
  double t = 0.0;
  std::vector<cplx> psi, psi_t, psi_tt;

  NonlinearState() = default;
  explicit NonlinearState(const TorusGrid& g)
      : grid(g), psi(g.nspec()), psi_t(g.nspec()), psi_tt(g.nspec()) {}

  const std::vector<cplx>& field(int ell) const {
    if (ell == 0) return psi;
    if (ell == 1) return psi_t;
    if (ell == 2) return psi_tt;
    throw std::invalid_argument("NonlinearState: field index must be 0..2");
  }

  const std::vector<double>& real_field(int ell) const {
    if (ell < 0 || ell > 2)
      throw std::invalid_argument(
          "NonlinearState: field index must be 0..2");
    if (!cache_ok_[ell]) {
      cache_[ell] = grid.to_real(field(ell));
      cache_ok_[ell] = true;
    }
    return cache_[ell];
  }

  void invalidate_real_cache() const { cache_ok_ = {false, false, false}; }

 private:
  mutable std::array<std::vector<double>, 3> cache_{};
  mutable std::array<bool, 3> cache_ok_{false, false, false};
};

struct BoxData {
  TorusGrid grid;
  std::vector<cplx> psi0, psi1, psi2;
};

// psi0 = eps cos(k x_1), psi1 = psi2 = 0, assembled by sampling so it works
// for every d. Modes with 3k > M do not survive dealiased ingestion.
inline BoxData cosine_data(const TorusGrid& g, double eps, int k = 1) {
  if (k < 1 || k > g.M / 2)
    throw std::invalid_argument("cosine_data: k must lie in [1, M/2]");
  std::vector<double> f(g.nreal());
  const double w = 2.0 * detail::pi / g.L * k;
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = eps * std::cos(w * g.point(i)[0]);
  BoxData d;
  d.grid = g;
  d.psi0 = g.to_spectral(f);
  d.psi1.assign(g.nspec(), cplx{});
  d.psi2.assign(g.nspec(), cplx{});
  return d;
}

// Ingestion dealiases, so the pseudo-spectral product contract holds from
// the first step.
inline NonlinearState initial_state(const BoxData& d) {
  if (d.psi0.size() != d.grid.nspec() || d.psi1.size() != d.grid.nspec() ||
      d.psi2.size() != d.grid.nspec())
    throw std::invalid_argument("initial_state: spectral size mismatch");
  NonlinearState s(d.grid);
  s.t = 0.0;
  s.psi = d.psi0;
  s.psi_t = d.psi1;
  s.psi_tt = d.psi2;
  s.grid.dealias(s.psi);
  s.grid.dealias(s.psi_t);
  s.grid.dealias(s.psi_tt);
  return s;
}

// F(psi) = c0^{-2} (2|grad psi_t|^2 + 2 grad psi . grad(Lap psi)
//                   + (gamma-1)(Lap psi)^2 + (gamma-1) psi_t Lap psi_t).
// Derivatives spectrally, products pointwise, result dealiased.
inline std::vector<cplx> nonlinearity_F(const NonlinearState& s,
                                        const ModelParams& p) {
  const TorusGrid& g = s.grid;
  if (s.psi.size() != g.nspec() || s.psi_t.size() != g.nspec())
    throw std::invalid_argument("nonlinearity_F: spectral size mismatch");
  const double two_pi_over_L = 2.0 * detail::pi / g.L;
  const std::size_t ns = g.nspec();

  std::vector<cplx> scratch(ns);
  auto real_of = [&](const std::vector<cplx>& src, int axis,
                     bool laplacian) -> std::vector<double> {
    for (std::size_t i = 0; i < ns; ++i) {
      cplx v = src[i];
      if (laplacian) {
        double r = g.r_of(i);
        v *= -r * r;
      }
      if (axis >= 0) {
        double ka = two_pi_over_L * g.freq(i)[axis];
        v *= cplx(0.0, ka);
      }
      scratch[i] = v;
    }
    return g.to_real(scratch);
  };

  std::vector<double> acc(g.nreal(), 0.0);
  for (int a = 0; a < g.d; ++a) {
    std::vector<double> dpsit = real_of(s.psi_t, a, false);
    std::vector<double> dpsi = real_of(s.psi, a, false);
    std::vector<double> dlap = real_of(s.psi, a, true);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += 2.0 * dpsit[i] * dpsit[i] + 2.0 * dpsi[i] * dlap[i];
  }
  {
    std::vector<double> lap = real_of(s.psi, -1, true);
    std::vector<double> lap_t = real_of(s.psi_t, -1, true);
    const std::vector<double>& psit = s.real_field(1);
    const double gm1 = p.gamma - 1.0;
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += gm1 * (lap[i] * lap[i] + psit[i] * lap_t[i]);
  }
  const double c2 = 1.0 / (p.c0 * p.c0);
  for (double& v : acc) v *= c2;

  std::vector<cplx> out = g.to_spectral(acc);
  g.dealias(out);
  return out;
}

namespace detail {

// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2, series below |z| = 0.7
// so small arguments stay cancellation-free (phi1(0) = 1, phi2(0) = 1/2).
inline cplx phi1(cplx z) {
  if (std::abs(z) > 0.7) return (std::exp(z) - 1.0) / z;
  cplx term = 1.0, sum = 1.0;
  for (int n = 1; n <= 22; ++n) {
    term *= z / static_cast<double>(n + 1);
    sum += term;
  }
  return sum;
}

inline cplx phi2(cplx z) {
  if (std::abs(z) > 0.7) return (std::exp(z) - 1.0 - z) / (z * z);
  cplx term = 0.5, sum = 0.5;
  for (int n = 1; n <= 22; ++n) {
    term *= z / static_cast<double>(n + 2);
    sum += term;
  }
  return sum;
}

// Exact one-step data for a single mode: the homogeneous propagator (rows
// psi, psi_t, psi_tt; columns the three kernels) and the Duhamel moments of
// the third-datum kernel against 1 and sigma/dt on [0, dt],
//   j0[m] = int K2^(m)(dt-sigma) dsigma,  j1[m] = int K2^(m)(dt-sigma)
//   (sigma/dt) dsigma,
// so a forcing a + b sigma/dt enters as j0 a + j1 b per row.
struct ModeOp {
  std::array<double, 9> prop{};
  std::array<double, 3> j0{};
  std::array<double, 3> j1{};
};

inline ModeOp mode_op(const ModelParams& p, double r, double dt) {
  ModeOp op;
  if (r == 0.0) {
    // Triple zero root: polynomial flow and exact kernel moments.
    op.prop = {1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0};
    op.j0 = {dt * dt * dt / 6.0, 0.5 * dt * dt, dt};
    op.j1 = {dt * dt * dt / 24.0, dt * dt / 6.0, 0.5 * dt};
    return op;
  }
  CharacteristicRoots cr = characteristic_roots(p, r);
  KernelTriple K = kernels_at(cr, dt);
  for (int j = 0; j < 3; ++j) {
    op.prop[j] = K.k[j].real();
    op.prop[3 + j] = K.kt[j].real();
    op.prop[6 + j] = K.ktt[j].real();
  }
  if (cr.near_degenerate) {
    // Ill-conditioned partial fractions; integrate the moments through an
    // augmented matrix exponential instead (u1' = u2, u2' = 0 drive slot 2).
    smat W = smat_zero(5);
    smat A = mode_matrix_from_roots(cr);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) W(i, j) = A(i, j);
    W(2, 3) = 1.0;
    W(3, 4) = 1.0;
    smat E = expm(dt * W);
    for (int i = 0; i < 3; ++i) {
      op.j0[i] = E(i, 3);
      op.j1[i] = E(i, 4) / dt;
    }
    return op;
  }
  const std::array<cplx, 3> l = {cr.root_full(0), cr.root_full(1),
                                 cr.root_full(2)};
  auto mom = [&](int kk) {
    int a = (kk + 1) % 3, c = (kk + 2) % 3;
    cplx b2 = 1.0 / ((l[kk] - l[a]) * (l[kk] - l[c]));
    cplx p1 = dt * phi1(l[kk] * dt), p2 = dt * phi2(l[kk] * dt);
    std::array<cplx, 6> m;
    for (int mm = 0; mm < 3; ++mm) {
      cplx w = b2;
      for (int q = 0; q < mm; ++q) w *= l[kk];
      m[mm] = w * p1;
      m[3 + mm] = w * p2;
    }
    return m;
  };
  std::array<double, 6> acc{};
  if (cr.conjugate_pair) {
    auto m0 = mom(0);
    auto m2 = mom(2);
    for (int i = 0; i < 6; ++i) acc[i] = 2.0 * m0[i].real() + m2[i].real();
  } else {
    auto m0 = mom(0);
    auto m1 = mom(1);
    auto m2 = mom(2);
    for (int i = 0; i < 6; ++i)
      acc[i] = m0[i].real() + m1[i].real() + m2[i].real();
  }
  op.j0 = {acc[0], acc[1], acc[2]};
  op.j1 = {acc[3], acc[4], acc[5]};
  return op;
}

// Per-mode operators deduplicated over the integer |k|^2 classes.
struct StepTable {
  double dt = 0.0;
  std::vector<std::uint32_t> op_of;
  std::vector<ModeOp> ops;
};

inline StepTable build_step_table(const TorusGrid& g, const ModelParams& p,
                                  double dt) {
  if (!(dt > 0.0))
    throw std::invalid_argument("step table: dt must be > 0");
  StepTable T;
  T.dt = dt;
  T.op_of.resize(g.nspec());
  std::map<long long, std::uint32_t> seen;
  std::vector<double> radii;
  for (std::size_t i = 0; i < g.nspec(); ++i) {
    long long q = g.ksq(i);
    auto it = seen.find(q);
    if (it == seen.end()) {
      it = seen.emplace(q, static_cast<std::uint32_t>(radii.size())).first;
      radii.push_back(g.r_of(i));
    }
    T.op_of[i] = it->second;
  }
  T.ops.resize(radii.size());
  parallel_for(radii.size(),
               [&](std::size_t j) { T.ops[j] = mode_op(p, radii[j], dt); });
  return T;
}

// y(t+dt) = prop y(t) + j0 f0 + j1 (f1 - f0); f1 == nullptr freezes the
// forcing at f0 (exponential Euler stage), f0 == nullptr is homogeneous.
inline NonlinearState advance(const NonlinearState& s, const StepTable& T,
                              const std::vector<cplx>* f0,
                              const std::vector<cplx>* f1) {
  NonlinearState out(s.grid);
  out.t = s.t + T.dt;
  parallel_for(s.grid.nspec(), [&](std::size_t i) {
    const ModeOp& op = T.ops[T.op_of[i]];
    cplx y0 = s.psi[i], y1 = s.psi_t[i], y2 = s.psi_tt[i];
    cplx a0 = op.prop[0] * y0 + op.prop[1] * y1 + op.prop[2] * y2;
    cplx a1 = op.prop[3] * y0 + op.prop[4] * y1 + op.prop[5] * y2;
    cplx a2 = op.prop[6] * y0 + op.prop[7] * y1 + op.prop[8] * y2;
    if (f0 != nullptr) {
      cplx g0 = (*f0)[i];
      a0 += op.j0[0] * g0;
      a1 += op.j0[1] * g0;
      a2 += op.j0[2] * g0;
      if (f1 != nullptr) {
        cplx dg = (*f1)[i] - g0;
        a0 += op.j1[0] * dg;
        a1 += op.j1[1] * dg;
        a2 += op.j1[2] * dg;
      }
    }
    out.psi[i] = a0;
    out.psi_t[i] = a1;
    out.psi_tt[i] = a2;
  });
  return out;
}

inline bool state_finite(const NonlinearState& s) {
  auto ok = [](const std::vector<cplx>& v) {
    for (const cplx& z : v)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  };
  return ok(s.psi) && ok(s.psi_t) && ok(s.psi_tt);
}

}  // namespace detail

// Homogeneous flow, exact per mode at any step size.
inline NonlinearState linear_step(const NonlinearState& s,
                                  const ModelParams& p, double dt) {
  if (!(dt > 0.0))
    throw std::invalid_argument("linear_step: dt must be > 0");
  detail::StepTable T = detail::build_step_table(s.grid, p, dt);
  return detail::advance(s, T, nullptr, nullptr);
}

// Optional forcing override: absolute time -> dealiased spectral forcing.
// Empty means the intrinsic nonlinearity F(psi).
using SpectralForcing = std::function<std::vector<cplx>(double)>;

// Exponential predictor-corrector: the linear part is propagated exactly and
// the Duhamel integral uses the forcing interpolated linearly between the
// step endpoints (two stages, second order in dt).
inline NonlinearState duhamel_step(const NonlinearState& s,
                                   const ModelParams& p, double dt,
                                   const SpectralForcing& forcing = {}) {
  if (!(dt > 0.0))
    throw std::invalid_argument("duhamel_step: dt must be > 0");
  detail::StepTable T = detail::build_step_table(s.grid, p, dt);
  std::vector<cplx> f0 = forcing ? forcing(s.t) : nonlinearity_F(s, p);
  if (f0.size() != s.grid.nspec())
    throw std::invalid_argument("duhamel_step: forcing size mismatch");
  NonlinearState pred = detail::advance(s, T, &f0, nullptr);
  std::vector<cplx> f1 = forcing ? forcing(pred.t) : nonlinearity_F(pred, p);
  if (f1.size() != s.grid.nspec())
    throw std::invalid_argument("duhamel_step: forcing size mismatch");
  NonlinearState out = detail::advance(s, T, &f0, &f1);
  if (!detail::state_finite(out))
    throw std::runtime_error(
        "duhamel_step: non-finite spectral coefficient (overflow)");
  return out;
}

// Weighted evolution-space sample at the state's own time,
//   sum_ell (1+t)^{-(2-ell)/2 + n/4} ||dt^ell psi||_{L^2}
//         + (1+t)^{(s+2-ell)/2 + n/4} |||D|^{s+4-2ell} dt^ell psi||_{L^2},
// with n = d. The weights are kept exactly as in the free-space theory even
// though their decay content is vacuous on a torus.
inline double xs_sample(const NonlinearState& s, double sobolev_s = 2.0) {
  const double n4 = 0.25 * s.grid.d;
  double acc = 0.0;
  for (int ell = 0; ell < 3; ++ell) {
    double wlo = std::pow(1.0 + s.t, -0.5 * (2.0 - ell) + n4);
    double whi = std::pow(1.0 + s.t, 0.5 * (sobolev_s + 2.0 - ell) + n4);
    acc += wlo * box_l2(s.grid, s.field(ell)) +
           whi * box_homogeneous_sobolev(s.grid, s.field(ell),
                                         sobolev_s + 4.0 - 2.0 * ell);
  }
  return acc;
}

struct PicardResult {
  double T = 1.0;
  double dt = 1e-3;
  double s = 2.0;
  std::size_t steps = 0;
  std::vector<double> iterate_norms;  // X_s norms of psi^(0), psi^(1), ...
  std::vector<double> diff_norms;     // ||psi^(k+1) - psi^(k)||_{X_s}
  std::vector<double> ratios;         // successive quotients of diff_norms
  double first_correction = 0.0;
  bool contraction = false;
  bool diverged = false;  // three consecutive growing differences
  int diverged_at = -1;
};

namespace detail {

struct BoxTrajectory {
  std::vector<std::vector<cplx>> f0, f1, f2;  // per sample time
};

inline double xs_traj_norm(const TorusGrid& g, const BoxTrajectory& tr,
                           double dt, double s) {
  double best = 0.0;
  NonlinearState scratch(g);
  for (std::size_t m = 0; m < tr.f0.size(); ++m) {
    scratch.t = dt * static_cast<double>(m);
    scratch.psi = tr.f0[m];
    scratch.psi_t = tr.f1[m];
    scratch.psi_tt = tr.f2[m];
    best = std::max(best, xs_sample(scratch, s));
  }
  return best;
}

}  // namespace detail

// Fixed-point iteration psi^(0) = linear flow, psi^(k+1) = linear flow plus
// the Duhamel image of F(psi^(k)), on the uniform sample grid m dt. The
// known forcing trajectory makes each iterate a linear propagation, so the
// only discretization is the second-order endpoint interpolation of F.
inline PicardResult picard_iterate(const BoxData& data, const ModelParams& p,
                                   double T = 1.0, int iterations = 5,
                                   double dt = 1e-3, double s = 2.0) {
  if (!(T > 0.0))
    throw std::invalid_argument("picard_iterate: T must be > 0");
  if (iterations < 1)
    throw std::invalid_argument("picard_iterate: iterations must be >= 1");
  if (!(dt > 0.0) || !(dt <= T))
    throw std::invalid_argument("picard_iterate: need 0 < dt <= T");
  const TorusGrid& g = data.grid;
  std::size_t nt = static_cast<std::size_t>(std::llround(T / dt));
  if (nt < 1) nt = 1;
  const double h = T / static_cast<double>(nt);  // exact landing on T

  PicardResult out;
  out.T = T;
  out.dt = h;
  out.s = s;
  out.steps = nt;

  detail::StepTable table = detail::build_step_table(g, p, h);

  // Linear trajectory psi^(0).
  detail::BoxTrajectory lin;
  lin.f0.resize(nt + 1);
  lin.f1.resize(nt + 1);
  lin.f2.resize(nt + 1);
  NonlinearState cur = initial_state(data);
  lin.f0[0] = cur.psi;
  lin.f1[0] = cur.psi_t;
  lin.f2[0] = cur.psi_tt;
  for (std::size_t m = 0; m < nt; ++m) {
    cur = detail::advance(cur, table, nullptr, nullptr);
    lin.f0[m + 1] = cur.psi;
    lin.f1[m + 1] = cur.psi_t;
    lin.f2[m + 1] = cur.psi_tt;
  }

  detail::BoxTrajectory prev = lin;
  out.iterate_norms.push_back(detail::xs_traj_norm(g, lin, h, s));

  NonlinearState scratch(g);
  int grow_run = 0;
  for (int k = 0; k < iterations; ++k) {
    detail::BoxTrajectory next;
    next.f0.resize(nt + 1);
    next.f1.resize(nt + 1);
    next.f2.resize(nt + 1);
    next.f0[0] = lin.f0[0];
    next.f1[0] = lin.f1[0];
    next.f2[0] = lin.f2[0];

    auto forcing_at = [&](std::size_t m) {
      scratch.t = h * static_cast<double>(m);
      scratch.psi = prev.f0[m];
      scratch.psi_t = prev.f1[m];
      scratch.psi_tt = prev.f2[m];
      scratch.invalidate_real_cache();
      return nonlinearity_F(scratch, p);
    };

    NonlinearState v(g);  // Duhamel accumulator, zero data
    std::vector<cplx> fprev = forcing_at(0);
    double diff_acc = 0.0;
    NonlinearState dstate(g);
    for (std::size_t m = 0; m < nt; ++m) {
      std::vector<cplx> fcur = forcing_at(m + 1);
      v = detail::advance(v, table, &fprev, &fcur);
      fprev = std::move(fcur);
      next.f0[m + 1] = lin.f0[m + 1];
      next.f1[m + 1] = lin.f1[m + 1];
      next.f2[m + 1] = lin.f2[m + 1];
      for (std::size_t i = 0; i < g.nspec(); ++i) {
        next.f0[m + 1][i] += v.psi[i];
        next.f1[m + 1][i] += v.psi_t[i];
        next.f2[m + 1][i] += v.psi_tt[i];
      }
    }

    // Difference norm against the previous iterate, in the same X_s metric.
    for (std::size_t m = 0; m <= nt; ++m) {
      dstate.t = h * static_cast<double>(m);
      for (std::size_t i = 0; i < g.nspec(); ++i) {
        dstate.psi[i] = next.f0[m][i] - prev.f0[m][i];
        dstate.psi_t[i] = next.f1[m][i] - prev.f1[m][i];
        dstate.psi_tt[i] = next.f2[m][i] - prev.f2[m][i];
      }
      diff_acc = std::max(diff_acc, xs_sample(dstate, s));
    }

    out.diff_norms.push_back(diff_acc);
    out.iterate_norms.push_back(detail::xs_traj_norm(g, next, h, s));
    if (out.diff_norms.size() >= 2) {
      double prev_diff = out.diff_norms[out.diff_norms.size() - 2];
      out.ratios.push_back(prev_diff > 0.0
                               ? diff_acc / prev_diff
                               : (diff_acc > 0.0
                                      ? std::numeric_limits<double>::infinity()
                                      : 0.0));
      grow_run = diff_acc > prev_diff ? grow_run + 1 : 0;
      if (grow_run >= 3 || !std::isfinite(diff_acc)) {
        out.diverged = true;
        out.diverged_at = k;
        break;
      }
    } else if (!std::isfinite(diff_acc)) {
      out.diverged = true;
      out.diverged_at = k;
      break;
    }
    prev = std::move(next);
  }

  out.first_correction = out.diff_norms.empty() ? 0.0 : out.diff_norms[0];
  out.contraction = !out.diverged && !out.ratios.empty();
  for (double q : out.ratios)
    if (!(q < 1.0)) out.contraction = false;
  return out;
}

struct ThresholdScan {
  std::vector<double> eps;
  std::vector<double> max_ratio;
  double eps_star = std::numeric_limits<double>::quiet_NaN();
};

// Sweep the data amplitude and locate where the worst Picard ratio crosses 1
// (log-log interpolation between the bracketing samples).
inline ThresholdScan picard_threshold_scan(const TorusGrid& g,
                                           const ModelParams& p,
                                           const std::vector<double>& eps_list,
                                           double T = 1.0, int iterations = 4,
                                           double dt = 1e-3, double s = 2.0) {
  if (eps_list.empty())
    throw std::invalid_argument("picard_threshold_scan: empty eps list");
  ThresholdScan out;
  for (double e : eps_list) {
    if (!(e > 0.0))
      throw std::invalid_argument("picard_threshold_scan: eps must be > 0");
    PicardResult r = picard_iterate(cosine_data(g, e), p, T, iterations, dt, s);
    double worst = 0.0;
    for (double q : r.ratios) worst = std::max(worst, q);
    if (r.diverged && r.ratios.empty())
      worst = std::numeric_limits<double>::infinity();
    out.eps.push_back(e);
    out.max_ratio.push_back(worst);
  }
  for (std::size_t i = 0; i + 1 < out.eps.size(); ++i) {
    double a = out.max_ratio[i], b = out.max_ratio[i + 1];
    if (a < 1.0 && b >= 1.0 && std::isfinite(b)) {
      double la = std::log(a), lb = std::log(b);
      double u = (0.0 - la) / (lb - la);
      out.eps_star = std::exp(std::log(out.eps[i]) +
                              u * (std::log(out.eps[i + 1]) -
                                   std::log(out.eps[i])));
      break;
    }
  }
  return out;
}

struct RunRow {
  double t = 0.0;
  double l2_psi = 0.0;
  double l2_psi_t = 0.0;
  double l2_psi_tt = 0.0;
  double hs_psi = 0.0;      // H^{s+4}
  double gap_linear = 0.0;  // L^2 distance to the linear flow
};

struct RunLedger {
  double T = 0.0;
  double dt = 0.0;
  double s = 2.0;
  std::vector<RunRow> rows;
  double initial_envelope = 0.0;  // H^{s+4} x H^{s+2} x H^s sum at t = 0
  double sup_envelope = 0.0;
  double sup_gap = 0.0;
  bool bounded = true;   // sup envelope <= 2x initial
  bool blew_up = false;  // envelope exceeded 1e6x initial
  double blow_time = -1.0;
};

// Time-march with the intrinsic nonlinearity next to an exact linear
// shadow. Free-space decay rates do not transfer to the box (no continuum
// of low frequencies), so the ledger certifies boundedness and the
// quadratic gap to the linear flow instead.
inline RunLedger small_data_run(const BoxData& data, const ModelParams& p,
                                double T = 10.0, double dt = 1e-3,
                                double s = 2.0, int sample_stride = 10) {
  if (!(T > 0.0))
    throw std::invalid_argument("small_data_run: T must be > 0");
  if (!(dt > 0.0) || !(dt <= T))
    throw std::invalid_argument("small_data_run: need 0 < dt <= T");
  if (sample_stride < 1)
    throw std::invalid_argument("small_data_run: sample_stride must be >= 1");
  const TorusGrid& g = data.grid;
  std::size_t nt = static_cast<std::size_t>(std::llround(T / dt));
  if (nt < 1) nt = 1;
  const double h = T / static_cast<double>(nt);

  RunLedger out;
  out.T = T;
  out.dt = h;
  out.s = s;

  detail::StepTable table = detail::build_step_table(g, p, h);
  NonlinearState cur = initial_state(data);
  NonlinearState lin = cur;

  auto envelope = [&](const NonlinearState& st) {
    return box_sobolev(g, st.psi, s + 4.0) +
           box_sobolev(g, st.psi_t, s + 2.0) + box_sobolev(g, st.psi_tt, s);
  };
  auto record = [&](const NonlinearState& st, double gap) {
    RunRow row;
    row.t = st.t;
    row.l2_psi = box_l2(g, st.psi);
    row.l2_psi_t = box_l2(g, st.psi_t);
    row.l2_psi_tt = box_l2(g, st.psi_tt);
    row.hs_psi = box_sobolev(g, st.psi, s + 4.0);
    row.gap_linear = gap;
    out.rows.push_back(row);
  };

  out.initial_envelope = envelope(cur);
  out.sup_envelope = out.initial_envelope;
  record(cur, 0.0);

  std::vector<cplx> gapbuf(g.nspec());
  for (std::size_t m = 0; m < nt; ++m) {
    std::vector<cplx> f0 = nonlinearity_F(cur, p);
    NonlinearState pred = detail::advance(cur, table, &f0, nullptr);
    std::vector<cplx> f1 = nonlinearity_F(pred, p);
    cur = detail::advance(cur, table, &f0, &f1);
    lin = detail::advance(lin, table, nullptr, nullptr);

    double env = envelope(cur);
    for (std::size_t i = 0; i < g.nspec(); ++i)
      gapbuf[i] = cur.psi[i] - lin.psi[i];
    double gap = box_l2(g, gapbuf);
    out.sup_envelope = std::max(out.sup_envelope, env);
    out.sup_gap = std::max(out.sup_gap, gap);

    bool bad = !std::isfinite(env) ||
               env > 1e6 * std::max(out.initial_envelope,
                                    std::numeric_limits<double>::min());
    if (bad && out.initial_envelope > 0.0) {
      out.blew_up = true;
      out.blow_time = cur.t;
      record(cur, gap);
      break;
    }
    if ((m + 1) % static_cast<std::size_t>(sample_stride) == 0 || m + 1 == nt)
      record(cur, gap);
  }
  out.bounded = out.sup_envelope <= 2.0 * out.initial_envelope ||
                out.initial_envelope == 0.0;
  return out;
}

// The gluing lemma of the fixed-point argument: for alpha's with
// max(alpha1, alpha2) > 1,
//   int_0^t (1+t-sigma)^{-alpha1} (1+sigma)^{-alpha2} dsigma
//     <= C (1+t)^{-min(alpha1, alpha2)}.
// Direct quadrature on the left, reference power law on the right.
inline bool convolution_hypothesis(double alpha1, double alpha2) {
  return std::max(alpha1, alpha2) > 1.0;
}

inline double convolution_law(double alpha1, double alpha2, double t) {
  return std::pow(1.0 + t, -std::min(alpha1, alpha2));
}

inline double convolution_integral(double alpha1, double alpha2, double t) {
  if (!(t >= 0.0))
    throw std::invalid_argument("convolution_integral: t must be >= 0");
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0))
    throw std::invalid_argument(
        "convolution_integral: exponents must be >= 0");
  if (t == 0.0) return 0.0;
  auto f = [&](double sigma) {
    return std::pow(1.0 + t - sigma, -alpha1) * std::pow(1.0 + sigma, -alpha2);
  };
  double tol = 1e-10 * convolution_law(alpha1, alpha2, t) + 1e-15;
  return detail::osc_integrate(f, 0.0, t, tol, 0.0, "convolution_integral",
                               std::min(alpha1, alpha2), t);
}

}  // namespace blackstock
