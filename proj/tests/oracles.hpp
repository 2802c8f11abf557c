#pragma once

// Test-only reference routines. None of these share code with the library's
// implementation paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "semcom/generator.hpp"

namespace semcom::testing {

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen,
                                         double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

// Dense row-major matrix as nested vectors.
using Matrix = std::vector<std::vector<double>>;

inline Matrix weight_matrix(const DenseLayer& layer) {
  Matrix m(static_cast<std::size_t>(layer.weight.rows()),
           std::vector<double>(static_cast<std::size_t>(layer.weight.cols())));
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < m[r].size(); ++c) {
      m[r][c] = layer.weight(static_cast<Eigen::Index>(r),
                             static_cast<Eigen::Index>(c));
    }
  }
  return m;
}

inline std::vector<double> bias_vector(const DenseLayer& layer) {
  return std::vector<double>(layer.bias.data(),
                             layer.bias.data() + layer.bias.size());
}

// Triple-loop style affine map A x + b.
inline std::vector<double> naive_affine(const Matrix& a,
                                        const std::vector<double>& x,
                                        const std::vector<double>& b) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    long double acc = 0.0L;
    for (std::size_t c = 0; c < x.size(); ++c) {
      acc += static_cast<long double>(a[r][c]) * x[c];
    }
    y[r] = static_cast<double>(acc) + b[r];
  }
  return y;
}

// Solves (A^T A) y = A^T rhs with a hand-rolled Cholesky factorization.
inline std::vector<double> normal_equations(const Matrix& a,
                                            const std::vector<double>& rhs) {
  const std::size_t n = a.front().size();
  Matrix g(n, std::vector<double>(n, 0.0));
  std::vector<double> atb(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      long double acc = 0.0L;
      for (std::size_t r = 0; r < a.size(); ++r) {
        acc += static_cast<long double>(a[r][i]) * a[r][j];
      }
      g[i][j] = g[j][i] = static_cast<double>(acc);
    }
    long double acc = 0.0L;
    for (std::size_t r = 0; r < a.size(); ++r) {
      acc += static_cast<long double>(a[r][i]) * rhs[r];
    }
    atb[i] = static_cast<double>(acc);
  }
  Matrix l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      long double s = g[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= static_cast<long double>(l[i][k]) * l[j][k];
      if (i == j) {
        if (s <= 0) throw std::runtime_error("normal matrix not positive definite");
        l[i][i] = std::sqrt(static_cast<double>(s));
      } else {
        l[i][j] = static_cast<double>(s) / l[j][j];
      }
    }
  }
  std::vector<double> z(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double s = atb[i];
    for (std::size_t k = 0; k < i; ++k) s -= static_cast<long double>(l[i][k]) * z[k];
    z[i] = static_cast<double>(s) / l[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    long double s = z[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= static_cast<long double>(l[k][i]) * y[k];
    y[i] = static_cast<double>(s) / l[i][i];
  }
  return y;
}

// Central differences of a scalar function.
inline std::vector<double> central_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + step;
    const double fp = f(x);
    x[k] = orig - step;
    const double fm = f(x);
    x[k] = orig;
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// |a - b| / max(|b|, floor)
inline double relative_error(const std::vector<double>& a,
                             const std::vector<double>& b,
                             double floor = 1e-12) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return norm2(d) / std::max(norm2(b), floor);
}

// Unit-power normalization written out independently of the library.
inline std::vector<double> reference_power_normalize(std::vector<double> v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  if (e == 0.0) return v;
  const double s = std::sqrt(static_cast<double>(v.size()) / (2.0 * e));
  for (double& x : v) x *= s;
  return v;
}

}  // namespace semcom::testing
