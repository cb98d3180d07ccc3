#pragma once

// Dense small-matrix algebra: SPD square roots, the tau/gamma-tilde
// decomposition, linear-dependence coefficients from Gram data, the
// generalized cross product on an oriented inner-product space, and
// enumeration of increasing injections.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "pd/errors.hpp"

namespace pd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSpdSymmetryTol = 1e-12;

// Checks symmetry to relative tolerance and positive-definiteness.
// Returns the eigenvalues (ascending) on success.
inline Vector require_spd(const Matrix& g, const char* what = "matrix") {
  if (g.rows() != g.cols() || g.rows() < 1) {
    throw ConfigError(std::string(what) + ": not square");
  }
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSpdSymmetryTol * scale) {
    throw ConfigError(std::string(what) + ": asymmetry " + std::to_string(asym) +
                      " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(((g + g.transpose()) * 0.5).eval());
  if (es.eigenvalues()(0) <= 0.0) {
    throw ConfigError(std::string(what) + ": not positive definite, smallest eigenvalue " +
                      std::to_string(es.eigenvalues()(0)));
  }
  return es.eigenvalues();
}

// Positive matrix square root of an SPD matrix via symmetric eigendecomposition.
inline Matrix matrix_sqrt(const Matrix& g) {
  require_spd(g, "matrix_sqrt input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(((g + g.transpose()) * 0.5).eval());
  return es.operatorSqrt();
}

// gamma = tau * gamma_tilde with tau = det(gamma)^{1/n}, det(gamma_tilde) = 1,
// and a_tilde the positive square root of gamma_tilde.
struct TensorDecomposition {
  double tau;
  Matrix gamma_tilde;
  Matrix a_tilde;
};

inline TensorDecomposition decompose(const Matrix& g) {
  require_spd(g, "decompose input");
  const int n = static_cast<int>(g.rows());
  const double tau = std::pow(g.determinant(), 1.0 / n);
  TensorDecomposition d;
  d.tau = tau;
  d.gamma_tilde = g / tau;
  d.a_tilde = matrix_sqrt(d.gamma_tilde);
  return d;
}

// <A,B> = sum_ij A_ij B_ij = tr(A B^T).
inline double frobenius(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("frobenius: dimension mismatch");
  }
  return a.cwiseProduct(b).sum();
}

// Coefficients mu_1..mu_{n+1} with sum_i mu_i V_i = 0, computed from inner
// products only: mu_i = (-1)^{i+n+1} det of the Gram rows with column i
// deleted, mu_{n+1} = det of the Gram of V_1..V_n. The input is the n x (n+1)
// matrix gram(p, q) = V_p . V_q.
inline Vector lindep_from_gram(const Matrix& gram) {
  const int n = static_cast<int>(gram.rows());
  const int np1 = static_cast<int>(gram.cols());
  if (np1 != n + 1 || n < 2) throw ConfigError("lindep_from_gram: need an n x (n+1) Gram, n >= 2");
  Vector mu(np1);
  Matrix minor_(n, n);
  for (int i = 0; i < np1; ++i) {
    int c = 0;
    for (int q = 0; q < np1; ++q) {
      if (q == i) continue;
      minor_.col(c++) = gram.col(q);
    }
    // 1-based sign (-1)^{i+n+1}; for i = n+1 this is +1 and the minor is the Gram determinant.
    const double sign = (((i + 1) + n + 1) % 2 == 0) ? 1.0 : -1.0;
    mu(i) = sign * minor_.determinant();
  }
  return mu;
}

inline Vector lindep_coefficients(const std::vector<Vector>& vectors) {
  const int np1 = static_cast<int>(vectors.size());
  const int n = np1 - 1;
  if (n < 2) throw ConfigError("lindep_coefficients: need n >= 2");
  for (const auto& v : vectors) {
    if (v.size() != n) throw ConfigError("lindep_coefficients: vectors must live in R^n");
  }
  Matrix gram(n, np1);  // rows: V_1..V_n, columns: V_1..V_{n+1}
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < np1; ++q) gram(p, q) = vectors[p].dot(vectors[q]);
  return lindep_from_gram(gram);
}

// Generalized cross product of N-1 vectors in an N-dimensional oriented
// inner-product space, given their coordinates in an orthonormal oriented
// basis. Component j is the cofactor of the formal determinant expanded
// along the last (basis) row.
inline Vector cross_product(const std::vector<Vector>& vectors) {
  if (vectors.empty()) throw ConfigError("cross_product: empty input");
  const int N = static_cast<int>(vectors.front().size());
  if (static_cast<int>(vectors.size()) != N - 1) {
    throw ConfigError("cross_product: need N-1 vectors of dimension N");
  }
  for (const auto& v : vectors) {
    if (v.size() != N) throw ConfigError("cross_product: dimension mismatch");
  }
  Matrix rows(N - 1, N);
  for (int i = 0; i < N - 1; ++i) rows.row(i) = vectors[i].transpose();

  Vector out(N);
  Matrix minor_(N - 1, N - 1);
  for (int j = 0; j < N; ++j) {
    int c = 0;
    for (int q = 0; q < N; ++q) {
      if (q == j) continue;
      minor_.col(c++) = rows.col(q);
    }
    // sign of entry (N, j+1) in the formal N x N determinant: (-1)^{N + j + 1} (1-based).
    const double sign = ((N + j) % 2 == 0) ? -1.0 : 1.0;
    out(j) = sign * minor_.determinant();
  }
  return out;
}

// vec/unvec with the column-major orientation E_11,...,E_n1, E_12,...,E_nn on M_n(R).
inline Vector vec_matrix(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}
inline Matrix unvec_matrix(const Vector& v, int n) {
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

// Cross product of n^2-1 matrices in M_n(R), returned as a matrix.
inline Matrix cross_product_matrices(const std::vector<Matrix>& ms) {
  if (ms.empty()) throw ConfigError("cross_product_matrices: empty input");
  const int n = static_cast<int>(ms.front().rows());
  std::vector<Vector> vs;
  vs.reserve(ms.size());
  for (const auto& m : ms) {
    if (m.rows() != n || m.cols() != n) {
      throw ConfigError("cross_product_matrices: dimension mismatch");
    }
    vs.push_back(vec_matrix(m));
  }
  return unvec_matrix(cross_product(vs), n);
}

// Relative residual of the transformation rule
// N(A M_1,...) = (det A)^n A^{-T} N(M_1,...).
inline double cross_product_pushforward_check(const Matrix& a, const std::vector<Matrix>& ms) {
  const int n = static_cast<int>(a.rows());
  const double det_a = a.determinant();
  if (std::abs(det_a) < 1e-300) throw ConfigError("cross_product_pushforward_check: singular matrix");
  std::vector<Matrix> transformed;
  transformed.reserve(ms.size());
  for (const auto& m : ms) transformed.push_back(a * m);
  const Matrix lhs = cross_product_matrices(transformed);
  const Matrix rhs =
      std::pow(det_a, n) * a.inverse().transpose() * cross_product_matrices(ms);
  const double denom = lhs.norm();
  if (denom == 0.0) return rhs.norm() == 0.0 ? 0.0 : 1.0;
  return (lhs - rhs).norm() / denom;
}

// Strictly increasing index tuple i_1 < ... < i_M drawn from [0, N) (0-based).
struct IncreasingInjection {
  int target_size = 0;
  std::vector<int> indices;
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

// All C(N,M) increasing injections in lexicographic order, or, when a cap is
// given and C(N,M) exceeds it, `cap` distinct injections sampled uniformly
// without replacement (deterministic for a fixed seed).
inline std::vector<IncreasingInjection> enumerate_injections(int M, int N,
                                                             std::optional<std::int64_t> cap = {},
                                                             std::uint64_t seed = 0) {
  if (M < 1 || M > N) throw ConfigError("enumerate_injections: require 1 <= M <= N");
  const double total = binomial(N, M);
  std::vector<IncreasingInjection> out;
  if (!cap || total <= static_cast<double>(*cap)) {
    std::vector<int> idx(M);
    for (int i = 0; i < M; ++i) idx[i] = i;
    while (true) {
      out.push_back({N, idx});
      int p = M - 1;
      while (p >= 0 && idx[p] == N - M + p) --p;
      if (p < 0) break;
      ++idx[p];
      for (int q = p + 1; q < M; ++q) idx[q] = idx[q - 1] + 1;
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<int> pool(N);
  while (static_cast<std::int64_t>(seen.size()) < *cap) {
    for (int i = 0; i < N; ++i) pool[i] = i;
    // partial Fisher-Yates for an M-subset
    for (int i = 0; i < M; ++i) {
      std::uniform_int_distribution<int> d(i, N - 1);
      std::swap(pool[i], pool[d(rng)]);
    }
    std::vector<int> idx(pool.begin(), pool.begin() + M);
    std::sort(idx.begin(), idx.end());
    seen.insert(std::move(idx));
  }
  for (auto& s : seen) out.push_back({N, s});
  return out;
}

}  // namespace pd
