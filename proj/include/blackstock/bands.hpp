#pragma once

// Pinned tolerances and slope bands for the hard checks shared by the
// acceptance runner and the CLI. Exact tolerances gate oracle equivalences;
// slope bands gate the rate fits; the family table is a frozen two-sided
// envelope of measured multiplier-norm ratios, widened to [0.8 min, 1.25 max].

namespace blackstock::bands {

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  constexpr bool contains(double x) const { return x >= lo && x <= hi; }
};

// characteristic roots
inline constexpr double root_residual_tol = 1e-10;  // scaled by max(1, r^4)
inline constexpr double vieta_rel_tol = 1e-10;

// kernels against the stiff ODE oracle, and the t = 0 identity pattern
inline constexpr double kernel_oracle_rel_tol = 1e-6;
inline constexpr double kernel_identity_tol = 1e-10;
inline constexpr double viscoelastic_identity_tol = 1e-10;

// multiplier-norm laws: value/law ratio must hold its band with a flat slope
inline constexpr double family_ratio_slope_tol = 0.03;
inline constexpr double family_s = 1.0;
inline constexpr double family_c = 0.5;

struct FamilyBand {
  int family;
  int n;
  double lo;
  double hi;
};

inline constexpr FamilyBand family_bands[] = {
    {1, 1, 0.75, 1.19}, {1, 2, 1.41, 2.24}, {1, 3, 2.31, 3.66},
    {1, 4, 3.55, 5.64}, {1, 5, 5.29, 8.42}, {1, 6, 7.71, 12.3},
    {2, 1, 1.37, 2.22}, {2, 2, 1.08, 1.87}, {2, 3, 1.88, 2.96},
    {2, 4, 1.77, 2.80}, {2, 5, 1.93, 3.05}, {2, 6, 2.22, 3.52},
    {3, 3, 2.66, 4.19}, {3, 4, 2.51, 3.95}, {3, 5, 2.73, 4.31},
    {3, 6, 3.14, 4.98}, {4, 1, 0.39, 0.64}, {4, 2, 0.80, 1.31},
    {4, 3, 1.61, 2.77}, {4, 4, 1.54, 2.43}, {4, 5, 2.36, 3.71},
    {4, 6, 1.92, 3.07},
};

// fitted ||psi|| slopes for third-datum Gaussian data with nonzero moment
inline constexpr Band decay_slope_n3{0.45, 0.55};
inline constexpr Band decay_slope_n5{-0.30, -0.20};
inline constexpr Band decay_slope_n6{-0.55, -0.45};
inline constexpr double log_law_spread_max = 10.0;  // n = 4: ||psi||^2 / ln t

// profile refinement (n = 5) and the viscoelastic comparison gap
inline constexpr Band profile_slope{-0.85, -0.65};
inline constexpr Band kuznetsov_slope_n1{-0.85, -0.65};
inline constexpr Band kuznetsov_slope_n3{-0.60, -0.40};

// kappa-sweep convergence orders for consistent data
inline constexpr Band first_order_slope{0.45, 0.55};
inline constexpr Band second_order_slope{1.40, 1.60};
inline constexpr Band second_to_first_ratio_slope{0.90, 1.10};

// energy certificates: margin >= -tol * max(1, rhs) along every trajectory
inline constexpr double certificate_margin_tol = 1e-9;

// nonlinear structure
inline constexpr double homogeneity_rel_tol = 1e-12;
inline constexpr double picard_ratio_max = 0.5;
inline constexpr Band first_correction_quadrupling{3.6, 4.4};
inline constexpr Band quadratic_gap_stability{0.8, 1.2};
inline constexpr Band convolution_ratio_edge{0.3, 1.1};
inline constexpr Band convolution_ratio_balanced{0.3, 4.1};

// viscous limit: only the floor is a hard assertion, the rate is conjectural
inline constexpr double viscous_slope_min = 0.8;

}  // namespace blackstock::bands
