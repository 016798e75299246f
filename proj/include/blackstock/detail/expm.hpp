#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace blackstock::detail {

// Small dense matrices (n <= 8) and Pade-13 scaling-and-squaring exponential.
// Sized for the 3x3 phase-space system plus phi-function augmentations.

struct smat {
  int n = 0;
  std::array<double, 64> a{};
  double& operator()(int i, int j) { return a[i * 8 + j]; }
  double operator()(int i, int j) const { return a[i * 8 + j]; }
};

inline smat smat_zero(int n) {
  smat m;
  m.n = n;
  return m;
}

inline smat smat_eye(int n) {
  smat m = smat_zero(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline smat operator*(const smat& x, const smat& y) {
  smat z = smat_zero(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      double xik = x(i, k);
      if (xik == 0.0) continue;
      for (int j = 0; j < x.n; ++j) z(i, j) += xik * y(k, j);
    }
  return z;
}

inline smat operator+(const smat& x, const smat& y) {
  smat z = x;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) z(i, j) += y(i, j);
  return z;
}

inline smat operator*(double c, const smat& x) {
  smat z = x;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) z(i, j) *= c;
  return z;
}

inline double norm1(const smat& x) {
  double best = 0.0;
  for (int j = 0; j < x.n; ++j) {
    double col = 0.0;
    for (int i = 0; i < x.n; ++i) col += std::abs(x(i, j));
    best = std::max(best, col);
  }
  return best;
}

// Solve A X = B in place (partial pivoting); returns X.
inline smat solve(smat A, smat B) {
  int n = A.n;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A(r, c)) > std::abs(A(p, c))) p = r;
    if (A(p, c) == 0.0) throw std::runtime_error("expm solve: singular matrix");
    if (p != c)
      for (int j = 0; j < n; ++j) {
        std::swap(A(c, j), A(p, j));
        std::swap(B(c, j), B(p, j));
      }
    double inv = 1.0 / A(c, c);
    for (int r = c + 1; r < n; ++r) {
      double f = A(r, c) * inv;
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j) A(r, j) -= f * A(c, j);
      for (int j = 0; j < n; ++j) B(r, j) -= f * B(c, j);
    }
  }
  for (int c = n - 1; c >= 0; --c) {
    double inv = 1.0 / A(c, c);
    for (int j = 0; j < n; ++j) {
      double s = B(c, j);
      for (int k = c + 1; k < n; ++k) s -= A(c, k) * B(k, j);
      B(c, j) = s * inv;
    }
  }
  return B;
}

inline smat expm(const smat& A0) {
  static const double b[14] = {64764752532480000.0, 32382376266240000.0,
                               7771770303897600.0,  1187353796428800.0,
                               129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,
                               1323241920.0,        40840800.0,
                               960960.0,            16380.0,
                               182.0,               1.0};
  const double theta13 = 5.371920351148152;
  smat A = A0;
  double nrm = norm1(A);
  int s = 0;
  if (nrm > theta13) {
    s = (int)std::ceil(std::log2(nrm / theta13));
    A = std::ldexp(1.0, -s) * A;
  }
  smat I = smat_eye(A.n);
  smat A2 = A * A, A4 = A2 * A2, A6 = A2 * A4;
  smat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
                b[5] * A4 + b[3] * A2 + b[1] * I);
  smat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
           b[2] * A2 + b[0] * I;
  smat P = V + U;
  smat Q = V + (-1.0 * U);
  smat E = solve(Q, P);
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

}  // namespace blackstock::detail
