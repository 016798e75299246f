#include <blackstock/model.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include <vector>

using namespace blackstock;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

ModelParams defaults() { return derive_params(0.01, 4.0 / 3.0, 1.0, 1.4, 1.0, false); }

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

}  // namespace

TEST_CASE("derived parameters match the stated formulas") {
  ModelParams p = defaults();
  REQUIRE(p.delta() == Approx(1.3373333333333333).epsilon(1e-14));
  REQUIRE(p.gamma_tilde() == Approx(0.018666666666666668).epsilon(1e-14));
  REQUIRE(p.prandtl() == Approx(100.0).epsilon(1e-14));
  REQUIRE(p.warnings.empty());

  ModelParams q = derive_params(0.01, 4.0 / 3.0, 1.0, 1.4, 1.0, true);
  REQUIRE(q.bnu() == 0.0);
  REQUIRE(q.delta() == Approx(0.004).epsilon(1e-14));
  REQUIRE(q.gamma_tilde() == 0.0);
}

TEST_CASE("parameter validation names the offending field") {
  REQUIRE_THROWS_WITH(derive_params(0.0, 1, 1, 1.4, 1, false),
                      ContainsSubstring("kappa"));
  REQUIRE_THROWS_WITH(derive_params(-0.01, 1, 1, 1.4, 1, false),
                      ContainsSubstring("kappa"));
  REQUIRE_THROWS_WITH(derive_params(0.01, 0, 1, 1.4, 1, false),
                      ContainsSubstring("b"));
  REQUIRE_THROWS_WITH(derive_params(0.01, 1, -2, 1.4, 1, false),
                      ContainsSubstring("nu"));
  REQUIRE_THROWS_WITH(derive_params(0.01, 1, 1, 1.0, 1, false),
                      ContainsSubstring("gamma"));
  REQUIRE_THROWS_WITH(derive_params(0.01, 1, 1, 1.7, 1, false),
                      ContainsSubstring("gamma"));
  REQUIRE_THROWS_WITH(derive_params(0.01, 1, 1, 1.4, 0, false),
                      ContainsSubstring("c0"));
  double nan = std::nan("");
  REQUIRE_THROWS_AS(derive_params(nan, 1, 1, 1.4, 1, false),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(derive_params(0.01, 1, 1, nan, 1, false),
                    std::invalid_argument);
}

TEST_CASE("regime warnings") {
  ModelParams big = derive_params(0.2, 4.0 / 3.0, 1.0, 1.4, 1.0, false);
  REQUIRE(big.warnings.size() == 1);
  REQUIRE_THAT(big.warnings[0], ContainsSubstring("smallness"));

  // b*nu == gamma*kappa collapses the large-frequency discriminant
  // ((delta+kappa)^2 - 4*gamma*b*nu*kappa = (b*nu - gamma*kappa)^2) to zero
  ModelParams becker = derive_params(0.05, 0.07, 1.0, 1.4, 1.0, false);
  REQUIRE(becker.warnings.size() == 1);
  REQUIRE_THAT(becker.warnings[0], ContainsSubstring("overdamped"));
}

TEST_CASE("r=0 yields the degenerate zero triple") {
  auto cr = characteristic_roots(defaults(), 0.0);
  REQUIRE(cr.near_degenerate);
  for (int j = 0; j < 3; ++j) {
    REQUIRE(cr.roots[j] == cplx(0.0, 0.0));
    REQUIRE(root_residual(defaults(), cr, j) == 0.0);
  }
}

TEST_CASE("Vieta identities and residual at r=1") {
  ModelParams p = defaults();
  auto cr = characteristic_roots(p, 1.0);
  cplx s1 = cr.root_full(0) + cr.root_full(1) + cr.root_full(2);
  cplx s3 = cr.root_full(0) * cr.root_full(1) * cr.root_full(2);
  REQUIRE(s1.real() == Approx(-1.3473333333333333).epsilon(1e-12));
  REQUIRE(s3.real() == Approx(-0.01).epsilon(1e-12));
  REQUIRE(std::abs(s1.imag()) < 1e-12);
  REQUIRE(std::abs(s3.imag()) < 1e-14);
  for (int j = 0; j < 3; ++j) REQUIRE(root_residual(p, cr, j) < 1e-12);
  REQUIRE(cr.conjugate_pair);
  REQUIRE(cr.roots[0].imag() > 0.0);
}

TEST_CASE("heat branch at small frequency") {
  auto cr = characteristic_roots(defaults(), 1e-3);
  REQUIRE(cr.conjugate_pair);
  double lam3_over_r2 = cr.roots[2].real() / 1e-6;
  REQUIRE(lam3_over_r2 == Approx(-0.01).epsilon(0.01));
}

TEST_CASE("residual, Vieta, closure, stability: random parameter sweep") {
  std::mt19937 rng(7151998u);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> rs = log_grid(1e-4, 1e3, 40);
  rs.push_back(1e4);
  rs.push_back(1e5);
  rs.push_back(1e6);

  for (int set = 0; set < 20; ++set) {
    double kappa = std::pow(10.0, -4.0 + 3.0 * U(rng));
    double b = 0.5 + 2.0 * U(rng);
    double nu = 0.3 + 1.7 * U(rng);
    double gamma = 1.0001 + (5.0 / 3.0 - 1.0001) * U(rng);
    bool inviscid = (set % 5 == 4);
    ModelParams p = derive_params(kappa, b, nu, gamma, 1.0, inviscid, 2.0);

    for (double r : rs) {
      auto cr = characteristic_roots(p, r);
      double budget = 1e-10 * std::max(1.0, r * r * r * r);
      for (int j = 0; j < 3; ++j) {
        INFO("set " << set << " r " << r << " root " << j);
        REQUIRE(root_residual(p, cr, j) <= budget);
        REQUIRE(cr.roots[j].real() < 0.0);
      }
      if (cr.conjugate_pair) {
        REQUIRE(cr.roots[0].imag() > 0.0);
        REQUIRE(cr.roots[1].real() == cr.roots[0].real());
        REQUIRE(cr.roots[1].imag() == -cr.roots[0].imag());
        REQUIRE(cr.roots[2].imag() == 0.0);
      } else {
        for (int j = 0; j < 3; ++j) REQUIRE(cr.roots[j].imag() == 0.0);
        REQUIRE(cr.roots[0].real() >= cr.roots[1].real());
        REQUIRE(cr.roots[1].real() >= cr.roots[2].real());
      }

      // Vieta against the double-double coefficients
      using namespace blackstock::detail;
      auto z = [&](int j) {
        return cdd{add(dd(cr.roots[j].real()), dd(cr.roots_lo[j].real())),
                   add(dd(cr.roots[j].imag()), dd(cr.roots_lo[j].imag()))};
      };
      cdd z0 = z(0), z1 = z(1), z2 = z(2);
      cdd e1 = add(add(z0, z1), z2);
      cdd e2 = add(add(mul(z0, z1), mul(z0, z2)), mul(z1, z2));
      cdd e3 = mul(mul(z0, z1), z2);
      symbol_cubic_t C = symbol_cubic(p, r);
      double t1 = -C.c2.value(), t2 = C.c1.value(), t3 = -C.c0.value();
      REQUIRE(std::abs(e1.re.value() - t1) <= 1e-10 * std::abs(t1));
      REQUIRE(std::abs(e2.re.value() - t2) <= 1e-10 * std::abs(t2));
      REQUIRE(std::abs(e3.re.value() - t3) <= 1e-10 * std::abs(t3));
      REQUIRE(std::abs(e1.im.value()) <= 1e-10 * std::abs(t1));
      REQUIRE(std::abs(e2.im.value()) <= 1e-10 * std::abs(t2));
      REQUIRE(std::abs(e3.im.value()) <= 1e-10 * std::abs(t3));
    }
  }
}

TEST_CASE("small-frequency expansion is third-order accurate") {
  ModelParams p = defaults();
  double max_pair = 0.0, max_heat = 0.0;
  for (double r : log_grid(1e-4, 1e-2, 41)) {
    auto cr = characteristic_roots(p, r);
    REQUIRE(cr.conjugate_pair);
    auto ap = small_freq_expansion(p, r);
    double r3 = r * r * r;
    max_pair = std::max(max_pair, std::abs(cr.root_full(0) - ap[0]) / r3);
    max_pair = std::max(max_pair, std::abs(cr.root_full(1) - ap[1]) / r3);
    max_heat = std::max(max_heat, std::abs(cr.root_full(2) - ap[2]) / r3);
  }
  // development-frozen ratio bands (measured 0.221 and 5.3e-7, x4 headroom)
  REQUIRE(max_pair < 1.0);
  REQUIRE(max_heat < 1e-5);
  REQUIRE_THROWS_AS(small_freq_expansion(p, 0.0), std::invalid_argument);
}

TEST_CASE("large-frequency expansion: viscous branches") {
  ModelParams p = defaults();
  // nearest-match each approximant; descending-Re ordering permutes branches
  double max_const = 0.0, max_d1 = 0.0, max_d2 = 0.0;
  for (double r : log_grid(1e2, 1e4, 41)) {
    auto cr = characteristic_roots(p, r);
    auto ap = large_freq_expansion(p, r);
    for (int k = 0; k < 3; ++k) {
      double best = 1e300;
      for (int j = 0; j < 3; ++j)
        best = std::min(best, std::abs(cr.root_full(j) - ap[k]));
      double scaled = best / std::abs(ap[k]) * r;
      if (k == 0) max_d1 = std::max(max_d1, scaled);
      if (k == 1) max_d2 = std::max(max_d2, scaled);
      if (k == 2) max_const = std::max(max_const, scaled);
    }
  }
  // measured 0.155 / 0.0056 / 0.149, frozen with x4 headroom
  REQUIRE(max_d1 < 0.7);
  REQUIRE(max_d2 < 0.05);
  REQUIRE(max_const < 0.6);

  auto ap = large_freq_expansion(p, 100.0);
  REQUIRE(ap[2].real() == Approx(-1.0 / (1.4 * 4.0 / 3.0)).epsilon(1e-14));
  REQUIRE(ap[2].real() == Approx(-0.5357142857142857).epsilon(1e-12));
}

TEST_CASE("large-frequency expansion: inviscid oscillatory slope") {
  ModelParams p = derive_params(0.01, 4.0 / 3.0, 1.0, 1.4, 1.0, true);
  auto cr = characteristic_roots(p, 1e4);
  REQUIRE(cr.conjugate_pair);
  double slope = std::abs(cr.roots[0].imag()) / 1e4;
  REQUIRE(std::abs(slope - 0.8451542547285166) < 5e-5);
  auto ap = large_freq_expansion(p, 1e4);
  REQUIRE(std::abs(ap[0].imag()) / 1e4 == Approx(0.8451542547285166).epsilon(1e-12));
  REQUIRE(ap[2].real() == Approx(-1.4 * 0.01 * 1e8).epsilon(1e-12));
}

TEST_CASE("stability margin over wide grids") {
  auto grid = log_grid(1e-4, 1e3, 1000);
  REQUIRE(stability_margin(defaults(), grid) < 0.0);
  ModelParams inv = derive_params(0.01, 4.0 / 3.0, 1.0, 1.4, 1.0, true);
  REQUIRE(stability_margin(inv, grid) < 0.0);
  REQUIRE_THROWS_AS(stability_margin(defaults(), {}), std::invalid_argument);
  REQUIRE_THROWS_AS(stability_margin(defaults(), {1.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("oscillatory-overdamped transition is flag-consistent") {
  ModelParams p = defaults();
  double lo = 1.0, hi = 100.0;
  REQUIRE(characteristic_roots(p, lo).conjugate_pair);
  REQUIRE_FALSE(characteristic_roots(p, hi).conjugate_pair);
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (characteristic_roots(p, mid).conjugate_pair)
      lo = mid;
    else
      hi = mid;
  }
  REQUIRE(hi - lo < 1e-12);
  for (double r : {lo, hi}) {
    auto cr = characteristic_roots(p, r);
    double dmin = std::min({std::abs(cr.roots[0] - cr.roots[1]),
                            std::abs(cr.roots[0] - cr.roots[2]),
                            std::abs(cr.roots[1] - cr.roots[2])});
    REQUIRE(cr.near_degenerate == (dmin < 1e-8 * (1.0 + r * r)));
    double budget = 1e-10 * std::max(1.0, r * r * r * r);
    for (int j = 0; j < 3; ++j) REQUIRE(root_residual(p, cr, j) <= budget);
    // Vieta catches a silently duplicated multiset even when each stored
    // root individually has a tiny residual.
    cplx l0 = cr.root_full(0), l1 = cr.root_full(1), l2 = cr.root_full(2);
    double r2 = r * r;
    REQUIRE(std::abs(-(l0 + l1 + l2).real() - (p.delta() + p.kappa) * r2) <=
            1e-10 * (p.delta() + p.kappa) * r2);
    REQUIRE(std::abs(-(l0 * l1 * l2).real() - p.kappa * r2 * r2) <=
            1e-10 * p.kappa * r2 * r2);
    REQUIRE(std::abs((l0 * l1 + l0 * l2 + l1 * l2).real() -
                     (1.0 + p.gamma_tilde() * r2) * r2) <=
            1e-10 * (1.0 + p.gamma_tilde() * r2) * r2);
  }
}
