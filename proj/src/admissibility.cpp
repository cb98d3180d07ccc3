#include "pd/admissibility.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace pd {

namespace {

std::vector<IncreasingInjection> basis_injections(int n, int m) {
  if (m < n) throw ConfigError("need at least n candidate solutions for a support basis");
  return enumerate_injections(n, m);
}

}  // namespace

Matrix basis_submatrix(const PowerDensitySet& data, const std::vector<int>& inj,
                       std::int64_t node) {
  const int n = static_cast<int>(inj.size());
  Matrix h(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) h(p, q) = data.h_entry(node, inj[p], inj[q]);
  return h;
}

std::vector<Matrix> basis_submatrix_gradients(const PowerDensitySet& data,
                                              const std::vector<int>& inj, std::int64_t node) {
  const int n = static_cast<int>(inj.size());
  const int dim = data.grid->dim();
  std::vector<Matrix> dh(dim, Matrix(n, n));
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      const Vector g = data.grad_h_entry(node, inj[p], inj[q]);
      for (int a = 0; a < dim; ++a) dh[a](p, q) = g(a);
    }
  }
  return dh;
}

ScalarField det_functional(const PowerDensitySet& data, int m) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  if (m > data.count) throw ConfigError("det_functional: m exceeds the number of solutions");
  const auto injections = basis_injections(n, m);
  ScalarField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    double s = 0.0;
    for (const auto& inj : injections) s += basis_submatrix(data, inj.indices, idx).determinant();
    out.at(idx) = s;
  }
  return out;
}

SupportBasisCover build_cover(const PowerDensitySet& data, int m, double threshold,
                              int block_size) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  if (block_size < 1) throw ConfigError("build_cover: block_size must be positive");
  if (m > data.count) throw ConfigError("build_cover: m exceeds the number of solutions");
  const auto injections = basis_injections(n, m);

  SupportBasisCover cover;
  cover.m = m;
  cover.block_size = block_size;
  cover.threshold = threshold;
  cover.block_of_node.assign(g.num_nodes(), -1);

  // Axis-aligned tiling; trailing blocks absorb the remainder.
  std::array<int, 3> nblocks{1, 1, 1};
  for (int a = 0; a < n; ++a) nblocks[a] = std::max(1, g.points(a) / block_size);
  auto block_coord = [&](int node_coord, int axis) {
    return std::min(node_coord / block_size, nblocks[axis] - 1);
  };
  int total_blocks = 1;
  for (int a = 0; a < n; ++a) total_blocks *= nblocks[a];

  std::vector<std::vector<std::int64_t>> block_nodes(total_blocks);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    int b = 0;
    for (int a = 0; a < n; ++a) b = b * nblocks[a] + block_coord(mi[a], a);
    cover.block_of_node[idx] = b;
    block_nodes[b].push_back(idx);
  }

  cover.blocks.resize(total_blocks);
  cover.achieved_min = std::numeric_limits<double>::infinity();
  for (int b = 0; b < total_blocks; ++b) {
    double best = -std::numeric_limits<double>::infinity();
    const std::vector<int>* best_inj = nullptr;
    for (const auto& inj : injections) {
      double mn = std::numeric_limits<double>::infinity();
      for (const std::int64_t idx : block_nodes[b]) {
        mn = std::min(mn, basis_submatrix(data, inj.indices, idx).determinant());
        if (mn <= best) break;
      }
      if (mn > best) {  // strict: enumeration order keeps the lexicographically smallest tie
        best = mn;
        best_inj = &inj.indices;
      }
    }
    if (best < threshold || best_inj == nullptr) {
      throw AdmissibilityError("no support basis meets the determinant threshold " +
                               std::to_string(threshold) + " on block " + std::to_string(b) +
                               " (best minimum " + std::to_string(best) + ")");
    }
    cover.blocks[b].injection = *best_inj;
    cover.blocks[b].min_det = best;
    cover.achieved_min = std::min(cover.achieved_min, best);
  }
  return cover;
}

MatrixField z_matrices(const PowerDensitySet& data, const SupportBasisCover& cover, int alpha) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  if (alpha < 0 || alpha >= data.count) throw ConfigError("z_matrices: alpha out of range");

  // Blocks sharing an injection share the global ratio fields mu_i / mu, so
  // gradients near block boundaries are taken of one smooth field.
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int b = 0; b < static_cast<int>(cover.blocks.size()); ++b) {
    const auto& inj = cover.blocks[b].injection;
    for (const int i : inj) {
      if (i == alpha) {
        throw ConfigError("z_matrices: alpha " + std::to_string(alpha) +
                          " belongs to the support basis of block " + std::to_string(b));
      }
    }
    groups[inj].push_back(b);
  }

  MatrixField z(g);
  const double h_scale = std::max(1.0, data.H.values().cwiseAbs().maxCoeff());
  for (const auto& [inj, block_ids] : groups) {
    Field ratios(g, n);
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      Matrix gram(n, n + 1);
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) gram(p, q) = data.h_entry(idx, inj[p], inj[q]);
        gram(p, n) = data.h_entry(idx, inj[p], alpha);
      }
      const Vector mu = lindep_from_gram(gram);
      const double denom = mu(n);
      if (std::abs(denom) < 1e-14 * std::pow(h_scale, n)) {
        throw AdmissibilityError("support basis degenerates at node " + std::to_string(idx) +
                                 ": |det H| = " + std::to_string(std::abs(denom)));
      }
      for (int i = 0; i < n; ++i) ratios.at(idx, i) = mu(i) / denom;
    }
    const Field grads = component_gradients(ratios);

    std::vector<bool> in_group(cover.blocks.size(), false);
    for (const int b : block_ids) in_group[b] = true;
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      if (!in_group[cover.block_of_node[idx]]) continue;
      Matrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) m(a, i) = grads.at(idx, i * n + a);
      z.set_mat(idx, m);
    }
  }
  return z;
}

MFamily m_family(const std::vector<MatrixField>& z_fields, const PowerDensitySet& data,
                 const SupportBasisCover& cover) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  const int l = static_cast<int>(z_fields.size());
  if (l == 0) throw ConfigError("m_family: no Z fields");

  MFamily fam;
  fam.n = n;
  fam.members = (1 + n * (n - 1) / 2) * l;
  fam.data = Field(g, fam.members * n * n);

  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix hk = basis_submatrix(data, cover.injection_at(idx), idx);
    int k = 0;
    auto put = [&](const Matrix& m) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          fam.data.values().data() + (idx * fam.members + k) * n * n, n, n) = m;
      ++k;
    };
    for (const auto& zf : z_fields) {
      const Matrix z = zf.mat(idx);
      put(z);
      const Matrix zh = z * hk;
      for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
          Matrix omega = Matrix::Zero(n, n);
          omega(p, q) = 1.0;
          omega(q, p) = -1.0;
          put(zh * omega);
        }
      }
    }
  }
  return fam;
}

HyperplaneEvaluation evaluate_hyperplane(const MFamily& family, const PowerDensitySet& data,
                                         const SupportBasisCover& cover,
                                         std::optional<std::int64_t> cap, std::uint64_t seed) {
  const Grid& g = *data.grid;
  const int n = family.n;
  const int nn1 = n * n - 1;
  if (family.members < nn1) {
    throw ConfigError("hyperplane functional needs at least n^2 - 1 family matrices");
  }
  const auto injections = enumerate_injections(nn1, family.members, cap, seed);

  HyperplaneEvaluation out{ScalarField(g), MatrixField(g, n, n)};
  std::vector<Matrix> subset(nn1);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix hk = basis_submatrix(data, cover.injection_at(idx), idx);
    const Matrix hk_inv = hk.inverse();
    double f = 0.0;
    Matrix sum = Matrix::Zero(n, n);
    for (const auto& inj : injections) {
      for (int k = 0; k < nn1; ++k) subset[k] = family.member(idx, inj.indices[k]);
      const Matrix nmat = cross_product_matrices(subset);
      const Matrix nhn = nmat * hk_inv * nmat.transpose();
      const double det = nhn.determinant();
      // Gram-type quantity: nonnegative in exact arithmetic, clamp round-off.
      f += det > 0.0 ? std::pow(det, 1.0 / n) : 0.0;
      sum += nhn;
    }
    out.f.at(idx) = f;
    out.cross_sum.set_mat(idx, sum);
  }
  return out;
}

ScalarField f_functional(const MFamily& family, const PowerDensitySet& data,
                         const SupportBasisCover& cover, std::optional<std::int64_t> cap,
                         std::uint64_t seed) {
  return evaluate_hyperplane(family, data, cover, cap, seed).f;
}

}  // namespace pd
