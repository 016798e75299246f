#include <blackstock/nonlinear_box.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "frozen_bands.hpp"

using namespace blackstock;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

ModelParams defaults() { return derive_params(0.01, 4.0 / 3.0, 1.0, 1.4, 1.0, false); }

std::vector<double> random_field(const TorusGrid& g, unsigned seed,
                                 double amp) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> f(g.nreal());
  for (double& v : f) v = u(rng);
  return f;
}

BoxData zero_data(const TorusGrid& g) {
  return {g, std::vector<cplx>(g.nspec()), std::vector<cplx>(g.nspec()),
          std::vector<cplx>(g.nspec())};
}

double max_coeff_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double state_diff(const NonlinearState& a, const NonlinearState& b) {
  return std::max({max_coeff_diff(a.psi, b.psi),
                   max_coeff_diff(a.psi_t, b.psi_t),
                   max_coeff_diff(a.psi_tt, b.psi_tt)});
}

// March the two-stage forced step with the table built once.
NonlinearState march(const BoxData& d, const ModelParams& p, double T,
                     double dt) {
  NonlinearState s = initial_state(d);
  detail::StepTable tab = detail::build_step_table(d.grid, p, dt);
  int n = static_cast<int>(std::llround(T / dt));
  for (int m = 0; m < n; ++m) {
    std::vector<cplx> f0 = nonlinearity_F(s, p);
    NonlinearState pred = detail::advance(s, tab, &f0, nullptr);
    std::vector<cplx> f1 = nonlinearity_F(pred, p);
    s = detail::advance(s, tab, &f0, &f1);
  }
  return s;
}

}  // namespace

TEST_CASE("real fields round-trip through the torus transforms") {
  for (int d : {1, 2, 3}) {
    TorusGrid g(d);
    CHECK(g.M == (d == 1 ? 256 : d == 2 ? 64 : 32));
    std::vector<double> f = random_field(g, 7 + d, 1.0);
    std::vector<cplx> a = g.to_spectral(f);
    std::vector<double> back = g.to_real(a);
    double round = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      round = std::max(round, std::abs(back[i] - f[i]));
    CHECK(round < 1e-12);

    // a transform of a real field is already Hermitian: reprojection is a
    // no-op up to rounding
    std::vector<cplx> again = g.to_spectral(back);
    CHECK(max_coeff_diff(a, again) < 1e-14);

    // Parseval against the plain Riemann sum
    double riemann = 0.0;
    for (double v : f) riemann += v * v;
    riemann = std::sqrt(riemann * std::pow(g.L, g.d) /
                        static_cast<double>(g.nreal()));
    CHECK(box_l2(g, a) == Approx(riemann).epsilon(1e-12));

    // the stored half plus conjugate weights covers the full lattice
    double wsum = 0.0;
    for (std::size_t i = 0; i < g.nspec(); ++i) wsum += g.mode_weight(i);
    CHECK(wsum == Approx(std::pow(double(g.M), g.d)).margin(1e-9));
  }

  TorusGrid g(1);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < g.nspec(); ++i)
    if (g.aliased(i)) ++masked;
  // keep |k| <= 85 of 0..128
  CHECK(masked == 43);
  std::vector<cplx> a(g.nspec(), cplx(1.0, 0.5));
  g.dealias(a);
  for (std::size_t i = 0; i < g.nspec(); ++i)
    CHECK(std::abs(a[i]) == (g.aliased(i) ? 0.0 : std::abs(cplx(1.0, 0.5))));

  CHECK_THROWS_AS(TorusGrid(0), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(4), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(1, 100), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(1, 256, -1.0), std::invalid_argument);
  CHECK_THROWS_WITH(g.to_real(std::vector<cplx>(5)),
                    ContainsSubstring("size mismatch"));
  CHECK_THROWS_WITH(box_l2(g, std::vector<cplx>(5)),
                    ContainsSubstring("size mismatch"));
}

TEST_CASE("the quadratic nonlinearity matches its symbolic oracle") {
  ModelParams p = defaults();
  const double eps = 0.37;

  // exact single-mode data: psi = eps cos(x), psi_t = 0
  {
    TorusGrid g(1);
    BoxData d = zero_data(g);
    d.psi0[1] = 0.5 * eps;
    NonlinearState s = initial_state(d);
    std::vector<double> Fx = g.to_real(nonlinearity_F(s, p));
    double err = 0.0;
    for (std::size_t i = 0; i < Fx.size(); ++i) {
      double x = g.point(i)[0];
      double cx = std::cos(x), sx = std::sin(x);
      double want = eps * eps / (p.c0 * p.c0) *
                    ((p.gamma - 1.0) * cx * cx - 2.0 * sx * sx);
      err = std::max(err, std::abs(Fx[i] - want));
    }
    CHECK(err < 1e-12);
  }

  // sampled-data route in one and two dimensions
  for (int dim : {1, 2}) {
    TorusGrid g(dim);
    NonlinearState s = initial_state(cosine_data(g, eps, 1));
    std::vector<double> Fx = g.to_real(nonlinearity_F(s, p));
    double err = 0.0;
    for (std::size_t i = 0; i < Fx.size(); ++i) {
      double x = g.point(i)[0];
      double cx = std::cos(x), sx = std::sin(x);
      double want = eps * eps / (p.c0 * p.c0) *
                    ((p.gamma - 1.0) * cx * cx - 2.0 * sx * sx);
      err = std::max(err, std::abs(Fx[i] - want));
    }
    CHECK(err < 1e-10);
  }

  // zero and spatially constant states annihilate F exactly
  {
    TorusGrid g(1);
    NonlinearState z(g);
    for (cplx v : nonlinearity_F(z, p)) CHECK(std::abs(v) == 0.0);
    NonlinearState c(g);
    c.psi[0] = 3.7;
    c.psi_t[0] = 1.1;
    c.psi_tt[0] = -0.4;
    for (cplx v : nonlinearity_F(c, p)) CHECK(std::abs(v) == 0.0);
  }

  // exact quadratic homogeneity and a dealiased result
  {
    TorusGrid g(1);
    NonlinearState s(g);
    s.psi = g.to_spectral(random_field(g, 3, 1.0));
    s.psi_t = g.to_spectral(random_field(g, 4, 1.0));
    g.dealias(s.psi);
    g.dealias(s.psi_t);
    std::vector<cplx> F = nonlinearity_F(s, p);

    const double lam = 1e-3;
    NonlinearState se(g);
    se.psi = s.psi;
    se.psi_t = s.psi_t;
    for (cplx& v : se.psi) v *= lam;
    for (cplx& v : se.psi_t) v *= lam;
    std::vector<cplx> Fe = nonlinearity_F(se, p);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
      err = std::max(err, std::abs(Fe[i] - lam * lam * F[i]));
      scale = std::max(scale, std::abs(lam * lam * F[i]));
    }
    CHECK(err < 1e-12 * scale);

    for (std::size_t i = 0; i < F.size(); ++i)
      if (g.aliased(i)) CHECK(std::abs(F[i]) == 0.0);
  }
}

TEST_CASE("linear stepping is the exact per-mode flow") {
  ModelParams p = defaults();
  TorusGrid g(1);
  NonlinearState s(g);
  s.psi = g.to_spectral(random_field(g, 11, 1.0));
  s.psi_t = g.to_spectral(random_field(g, 12, 0.5));
  s.psi_tt = g.to_spectral(random_field(g, 13, 0.25));
  g.dealias(s.psi);
  g.dealias(s.psi_t);
  g.dealias(s.psi_tt);

  // a thousand steps against the closed form at t = 1
  NonlinearState cur = s;
  detail::StepTable tab = detail::build_step_table(g, p, 1e-3);
  for (int m = 0; m < 1000; ++m) cur = detail::advance(cur, tab, nullptr, nullptr);
  CHECK(cur.t == Approx(1.0).margin(1e-12));
  double err = 0.0;
  for (std::size_t i = 0; i < g.nspec(); ++i) {
    ModeState ms =
        evolve_mode(p, {s.psi[i], s.psi_t[i], s.psi_tt[i]}, g.r_of(i), 1.0);
    err = std::max({err, std::abs(ms.psi - cur.psi[i]),
                    std::abs(ms.psi_t - cur.psi_t[i]),
                    std::abs(ms.psi_tt - cur.psi_tt[i])});
  }
  CHECK(err < 1e-12);

  // semigroup property
  NonlinearState two = linear_step(linear_step(s, p, 0.25), p, 0.25);
  NonlinearState one = linear_step(s, p, 0.5);
  CHECK(state_diff(two, one) < 1e-13);
  CHECK(two.t == Approx(0.5));

  // mean mode follows the polynomial flow
  cplx want =
      s.psi[0] + 0.5 * s.psi_t[0] + 0.5 * 0.5 * 0.5 * s.psi_tt[0];
  CHECK(std::abs(one.psi[0] - want) < 1e-15);
  CHECK(std::abs(one.psi_tt[0] - s.psi_tt[0]) == 0.0);

  NonlinearState z(g);
  NonlinearState z1 = linear_step(z, p, 0.3);
  CHECK(state_diff(z1, z) == 0.0);

  CHECK_THROWS_AS(linear_step(s, p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(linear_step(s, p, -1.0), std::invalid_argument);
}

TEST_CASE("the forced step reproduces a scalar quadrature oracle") {
  ModelParams p = defaults();
  TorusGrid g(1);

  SpectralForcing forcing = [&](double t) {
    std::vector<cplx> F(g.nspec(), cplx{});
    F[1] = 0.5 * std::exp(-t);
    return F;
  };
  Forcing scalar = [](double t) { return cplx(0.5 * std::exp(-t), 0.0); };
  auto oracle = ode_oracle(p, {0.0, 0.0, 0.0}, scalar, 1.0, {0.0, 1.0});

  NonlinearState s(g);
  const double dt = 5e-4;
  for (int m = 0; m < 2000; ++m) s = duhamel_step(s, p, dt, forcing);
  CHECK(s.t == Approx(1.0).margin(1e-9));
  double err = std::abs(s.psi[1] - oracle[1].psi);
  CHECK(err < 1e-8);
  CHECK(err < frozen::nb_manufactured_err);

  // zero forcing degenerates to the homogeneous step
  NonlinearState r(g);
  r.psi = g.to_spectral(random_field(g, 21, 1.0));
  r.psi_t = g.to_spectral(random_field(g, 22, 1.0));
  g.dealias(r.psi);
  g.dealias(r.psi_t);
  SpectralForcing zero = [&](double) {
    return std::vector<cplx>(g.nspec(), cplx{});
  };
  CHECK(state_diff(duhamel_step(r, p, 0.1, zero), linear_step(r, p, 0.1)) ==
        0.0);

  // overflow is detected, bad forcing sizes and steps rejected
  NonlinearState huge = initial_state(cosine_data(g, 1e150, 1));
  CHECK_THROWS_WITH(duhamel_step(huge, p, 1e-3),
                    ContainsSubstring("non-finite"));
  SpectralForcing bad = [](double) { return std::vector<cplx>(3); };
  CHECK_THROWS_WITH(duhamel_step(r, p, 1e-3, bad),
                    ContainsSubstring("size mismatch"));
  CHECK_THROWS_AS(duhamel_step(r, p, 0.0), std::invalid_argument);
}

TEST_CASE("halving the step quarters the splitting error") {
  ModelParams p = defaults();
  TorusGrid g(1);
  const double eps = 0.5, T = 0.5;
  BoxData d = cosine_data(g, eps, 1);

  NonlinearState ref = march(d, p, T, T / 4096.0);
  double errs[3];
  int k = 0;
  for (double dt : {T / 20.0, T / 40.0, T / 80.0}) {
    NonlinearState s = march(d, p, T, dt);
    std::vector<cplx> diff(g.nspec());
    for (std::size_t i = 0; i < g.nspec(); ++i)
      diff[i] = s.psi[i] - ref.psi[i];
    errs[k++] = box_l2(g, diff);
  }
  for (int j = 0; j + 1 < 3; ++j) {
    double q = errs[j] / errs[j + 1];
    CHECK(q > 3.5);
    CHECK(q > frozen::nb_richardson_lo);
    CHECK(q < frozen::nb_richardson_hi);
  }
}

TEST_CASE("picard iteration contracts for small data and reports divergence") {
  ModelParams p = defaults();
  TorusGrid g(1);

  PicardResult small = picard_iterate(cosine_data(g, 1e-3), p, 1.0, 4);
  CHECK(small.contraction);
  CHECK_FALSE(small.diverged);
  CHECK(small.steps == 1000);
  CHECK(small.first_correction > frozen::nb_first_corr_lo);
  CHECK(small.first_correction < frozen::nb_first_corr_hi);
  REQUIRE(small.ratios.size() == 3);
  for (double q : small.ratios) {
    CHECK(q < 0.5);
    CHECK(q < frozen::nb_picard_ratio_max);
  }
  for (std::size_t i = 1; i < small.diff_norms.size(); ++i)
    CHECK(small.diff_norms[i] < small.diff_norms[i - 1]);
  CHECK(small.iterate_norms.front() > 0.0);

  // quadratic structure: doubling the data quadruples the first correction
  PicardResult twice = picard_iterate(cosine_data(g, 2e-3), p, 1.0, 1);
  double quad = twice.first_correction / small.first_correction;
  CHECK(quad > 3.6);
  CHECK(quad < 4.4);
  CHECK(quad > frozen::nb_quadruple_lo);
  CHECK(quad < frozen::nb_quadruple_hi);

  PicardResult zero = picard_iterate(zero_data(g), p, 1.0, 2);
  CHECK(zero.first_correction == 0.0);
  CHECK(zero.iterate_norms.front() == 0.0);
  CHECK(zero.iterate_norms.back() == 0.0);
  CHECK_FALSE(zero.diverged);

  // far beyond the threshold every difference grows and the run is flagged
  PicardResult big = picard_iterate(cosine_data(g, 10.0), p, 1.0, 5);
  CHECK(big.diverged);
  CHECK(big.diverged_at >= 0);
  CHECK_FALSE(big.contraction);
  REQUIRE_FALSE(big.ratios.empty());
  for (double q : big.ratios) CHECK(q > 1.0);

  CHECK_THROWS_AS(picard_iterate(zero_data(g), p, -1.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(picard_iterate(zero_data(g), p, 1.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(picard_iterate(zero_data(g), p, 1.0, 3, 2.0),
                  std::invalid_argument);
}

TEST_CASE("an amplitude scan locates the contraction boundary") {
  ModelParams p = defaults();
  TorusGrid g(1);

  ThresholdScan sc =
      picard_threshold_scan(g, p, {0.3, 1.0, 3.0, 10.0}, 1.0, 4);
  REQUIRE(sc.eps.size() == 4);
  CHECK(sc.max_ratio.front() < 1.0);
  CHECK(sc.max_ratio.back() > 1.0);
  for (std::size_t i = 1; i < sc.max_ratio.size(); ++i)
    CHECK(sc.max_ratio[i] > sc.max_ratio[i - 1]);
  CHECK(std::isfinite(sc.eps_star));
  CHECK(sc.eps_star > frozen::nb_eps_star_lo);
  CHECK(sc.eps_star < frozen::nb_eps_star_hi);

  // the worst ratio grows linearly in the amplitude, as a quadratic
  // nonlinearity must
  double lin = sc.max_ratio[1] / sc.max_ratio[0];
  CHECK(lin > frozen::nb_ratio_linearity_lo);
  CHECK(lin < frozen::nb_ratio_linearity_hi);

  CHECK_THROWS_AS(picard_threshold_scan(g, p, {}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(picard_threshold_scan(g, p, {0.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("small-data runs stay bounded with a quadratic gap to linear") {
  ModelParams p = defaults();
  TorusGrid g(1);

  RunLedger a = small_data_run(cosine_data(g, 1e-3), p, 10.0, 1e-3);
  CHECK(a.bounded);
  CHECK_FALSE(a.blew_up);
  CHECK(a.rows.size() == 1001);
  CHECK(a.rows.front().t == 0.0);
  CHECK(a.rows.front().gap_linear == 0.0);
  CHECK(a.rows.back().t == Approx(10.0).margin(1e-9));
  CHECK(a.sup_envelope / a.initial_envelope >= 1.0);
  CHECK(a.sup_envelope / a.initial_envelope < frozen::nb_envelope_ratio_hi);
  CHECK(a.sup_envelope <= 2.0 * a.initial_envelope);
  for (const RunRow& row : a.rows) CHECK(row.hs_psi >= row.l2_psi);

  // quadratic gap, stable under halving the amplitude
  RunLedger b = small_data_run(cosine_data(g, 5e-4), p, 10.0, 1e-3);
  double qa = a.sup_gap / (1e-3 * 1e-3);
  double qb = b.sup_gap / (5e-4 * 5e-4);
  CHECK(qa / qb > 0.8);
  CHECK(qa / qb < 1.2);
  CHECK(qa / qb > frozen::nb_gap_stability_lo);
  CHECK(qa / qb < frozen::nb_gap_stability_hi);

  RunLedger z = small_data_run(zero_data(g), p, 1.0, 1e-3);
  CHECK(z.initial_envelope == 0.0);
  CHECK(z.sup_envelope == 0.0);
  CHECK(z.bounded);
  CHECK_FALSE(z.blew_up);
  for (const RunRow& row : z.rows) CHECK(row.l2_psi == 0.0);

  // far above the contraction threshold the run blows up and says so
  RunLedger big = small_data_run(cosine_data(g, 30.0), p, 10.0, 1e-3);
  CHECK(big.blew_up);
  CHECK(big.blow_time > 0.0);
  CHECK(big.blow_time < 10.0);
  CHECK(big.rows.back().t < 10.0);

  CHECK_THROWS_AS(small_data_run(zero_data(g), p, 0.0, 1e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(small_data_run(zero_data(g), p, 1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(small_data_run(zero_data(g), p, 1.0, 1e-3, 2.0, 0),
                  std::invalid_argument);
}

TEST_CASE("the convolution inequality holds exactly when its hypothesis does") {
  const double tgrid[5] = {1.0, 10.0, 100.0, 1000.0, 10000.0};

  struct Pair {
    double a1, a2, cap;
  };
  const Pair pairs[3] = {{2.0, 0.5, frozen::nb_conv_cap_edge},
                         {0.5, 2.0, frozen::nb_conv_cap_edge},
                         {1.5, 1.5, frozen::nb_conv_cap_balanced}};
  for (const Pair& pr : pairs) {
    CHECK(convolution_hypothesis(pr.a1, pr.a2));
    for (double t : tgrid) {
      double q = convolution_integral(pr.a1, pr.a2, t) /
                 convolution_law(pr.a1, pr.a2, t);
      CHECK(q > 0.3);
      CHECK(q < pr.cap);
    }
  }

  // exchanging the exponents mirrors the integrand, so the integrals agree
  for (double t : tgrid)
    CHECK(convolution_integral(2.0, 0.5, t) ==
          Approx(convolution_integral(0.5, 2.0, t)).epsilon(1e-8));

  // with max(alpha) <= 1 the claimed law genuinely fails: the ratio climbs
  CHECK_FALSE(convolution_hypothesis(0.5, 0.9));
  double early = convolution_integral(0.5, 0.9, 1.0) /
                 convolution_law(0.5, 0.9, 1.0);
  double late = convolution_integral(0.5, 0.9, 1e4) /
                convolution_law(0.5, 0.9, 1e4);
  CHECK(late / early > frozen::nb_conv_violator_growth);

  CHECK(convolution_integral(2.0, 0.5, 0.0) == 0.0);
  CHECK(convolution_law(2.0, 0.5, 3.0) == Approx(std::pow(4.0, -0.5)));
  CHECK_THROWS_AS(convolution_integral(2.0, 0.5, -1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(convolution_integral(-0.1, 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("conjugate symmetry and dealiased energy survive forced evolution") {
  ModelParams p = defaults();
  TorusGrid g(2);
  BoxData d;
  d.grid = g;
  d.psi0 = g.to_spectral(random_field(g, 31, 1e-2));
  d.psi1 = g.to_spectral(random_field(g, 32, 1e-2));
  d.psi2 = g.to_spectral(random_field(g, 33, 1e-2));
  NonlinearState s = initial_state(d);
  for (int m = 0; m < 10; ++m) s = duhamel_step(s, p, 1e-2);
  CHECK(s.t == Approx(0.1));

  for (int ell = 0; ell < 3; ++ell) {
    const std::vector<cplx>& v = s.field(ell);
    std::vector<cplx> re = g.to_spectral(g.to_real(v));
    CHECK(max_coeff_diff(re, v) < 1e-12);
    for (std::size_t i = 0; i < g.nspec(); ++i)
      if (g.aliased(i)) CHECK(std::abs(v[i]) == 0.0);
  }

  // the real-space mirror is cached and refreshed on demand
  NonlinearState c(g);
  c.psi[1] = cplx(0.25, 0.0);
  double v0 = c.real_field(0)[0];
  c.psi[1] = cplx(0.5, 0.0);
  CHECK(c.real_field(0)[0] == v0);  // stale by design until invalidated
  c.invalidate_real_cache();
  CHECK(c.real_field(0)[0] == Approx(2.0 * v0));
  CHECK_THROWS_AS(c.real_field(3), std::invalid_argument);
  CHECK_THROWS_AS(c.field(-1), std::invalid_argument);

  CHECK_THROWS_AS(cosine_data(g, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(cosine_data(g, 1.0, 64), std::invalid_argument);
}

TEST_CASE("evolution-space samples carry the printed weights") {
  TorusGrid g(1);
  NonlinearState s(g);
  s.psi[1] = cplx(0.3, 0.0);  // a single k = 1 mode, psi only

  // at t = 0 every weight is 1: low and high parts coincide for r = 1
  double base = xs_sample(s, 2.0);
  double l2 = box_l2(g, s.psi);
  CHECK(base == Approx(2.0 * l2).epsilon(1e-12));

  // at t = 3 the exponents -(2-0)/2 + 1/4 and (2+2-0)/2 + 1/4 apply
  s.t = 3.0;
  double shifted = xs_sample(s, 2.0);
  double want = (std::pow(4.0, -0.75) + std::pow(4.0, 2.25)) * l2;
  CHECK(shifted == Approx(want).epsilon(1e-12));

  // sobolev and homogeneous norms agree with hand values on that mode
  CHECK(box_sobolev(g, s.psi, 1.0) == Approx(std::sqrt(2.0) * l2));
  CHECK(box_homogeneous_sobolev(g, s.psi, 1.0) == Approx(l2));
  CHECK(box_sobolev(g, s.psi, 0.0) == Approx(l2));
  CHECK(box_homogeneous_sobolev(g, s.psi, 0.0) == Approx(l2));
}
