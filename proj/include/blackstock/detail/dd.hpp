#pragma once

#include <cmath>
#include <complex>

namespace blackstock::detail {

// Double-double arithmetic (Dekker/Knuth error-free transforms).
// Just enough for polishing cubic roots and evaluating their residuals:
// the residual contract at large |xi| sits below plain double rounding,
// so both the polish step and the check need ~2x double precision.

struct dd {
  double hi = 0.0;
  double lo = 0.0;
  dd() = default;
  dd(double h) : hi(h) {}
  dd(double h, double l) : hi(h), lo(l) {}
  double value() const { return hi + lo; }
};

inline dd two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

// requires |a| >= |b| or a == 0
inline dd quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline dd add(dd a, dd b) {
  dd s = two_sum(a.hi, b.hi);
  return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline dd sub(dd a, dd b) { return add(a, {-b.hi, -b.lo}); }

inline dd mul(dd a, dd b) {
  dd p = two_prod(a.hi, b.hi);
  return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline dd mul(dd a, double b) { return mul(a, dd(b)); }

// Complex double-double, used only transiently inside the root polisher.
struct cdd {
  dd re, im;
  cdd() = default;
  cdd(dd r, dd i) : re(r), im(i) {}
  cdd(std::complex<double> z) : re(z.real()), im(z.imag()) {}
  std::complex<double> value() const { return {re.value(), im.value()}; }
};

inline cdd add(cdd a, cdd b) { return {add(a.re, b.re), add(a.im, b.im)}; }
inline cdd mul(cdd a, cdd b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}
inline cdd add(cdd a, dd b) { return {add(a.re, b), a.im}; }

}  // namespace blackstock::detail
