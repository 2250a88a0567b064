#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

// Dense helpers for the small (d <= ~8) matrices used by the conjugate
// posteriors. Everything is row-major std::vector<std::vector<double>>.
namespace repsample::linalg {

using Mat = std::vector<std::vector<double>>;

inline Mat identity(std::size_t n) {
  Mat m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

// Lower Cholesky factor; requires symmetric positive (semi)definite input.
inline Mat cholesky(const Mat& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != n) throw std::invalid_argument("cholesky: not square");
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a[i][j] - a[j][i]) > 1e-9)
        throw std::invalid_argument("cholesky: not symmetric");
  }
  Mat l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s < -1e-12) throw std::invalid_argument("cholesky: not PSD");
        l[i][j] = std::sqrt(s > 1e-12 ? s : 1e-12);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

// Solve L y = b for lower-triangular L.
inline std::vector<double> forward_solve(const Mat& l,
                                         const std::vector<double>& b) {
  const std::size_t n = l.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  return y;
}

// Solve L^T x = y for lower-triangular L.
inline std::vector<double> backward_solve(const Mat& l,
                                          const std::vector<double>& y) {
  const std::size_t n = l.size();
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k][i] * x[k];
    x[i] = s / l[i][i];
  }
  return x;
}

// Inverse of a symmetric positive definite matrix via its Cholesky factor.
inline Mat spd_inverse(const Mat& a) {
  const std::size_t n = a.size();
  const Mat l = cholesky(a);
  Mat inv(n, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    const auto x = backward_solve(l, forward_solve(l, e));
    for (std::size_t r = 0; r < n; ++r) inv[r][c] = x[r];
  }
  // symmetrize away roundoff
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      inv[i][j] = inv[j][i] = 0.5 * (inv[i][j] + inv[j][i]);
  return inv;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), m = b[0].size(), k = b.size();
  Mat c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  const std::size_t n = a.size(), m = a[0].size();
  Mat t(m, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t[j][i] = a[i][j];
  return t;
}

}  // namespace repsample::linalg
