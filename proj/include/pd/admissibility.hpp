#pragma once

// Rank-maximality diagnostics gating the reconstructions: the determinant
// functional D over n-subsets of solutions, block covers selecting a support
// basis per block, Z-matrices of additional solutions, the matrix family they
// generate, and the hyperplane functional F.

#include <cstdint>
#include <optional>
#include <vector>

#include "pd/forward.hpp"
#include "pd/grid.hpp"

namespace pd {

// Nodewise sum over all n-subsets I of the first m solutions of det H_(I),
// where H_(I) is the n x n principal submatrix of H indexed by I.
ScalarField det_functional(const PowerDensitySet& data, int m);

struct SupportBasisCover {
  int m = 0;
  int block_size = 0;
  double threshold = 0.0;
  double achieved_min = 0.0;  // min over blocks of the block-minimum det H_(k)

  struct Block {
    std::vector<int> injection;  // 0-based solution indices, strictly increasing
    double min_det = 0.0;
  };
  std::vector<Block> blocks;
  std::vector<int> block_of_node;  // per grid node

  const std::vector<int>& injection_at(std::int64_t node) const {
    return blocks[block_of_node[node]].injection;
  }
};

// Tiles the grid into axis-aligned blocks of side `block_size` and selects,
// per block, the n-subset of the first m solutions maximizing the block
// minimum of det H_(k) (ties: lexicographically smallest). Throws
// AdmissibilityError naming the first block whose best minimum is below
// `threshold`.
SupportBasisCover build_cover(const PowerDensitySet& data, int m, double threshold,
                              int block_size);

// Z matrix of additional solution `alpha` w.r.t. the cover's block bases:
// column i is the gradient of the ratio mu_i / mu of linear-dependence
// coefficients of (basis gradients, grad u_alpha), computed from H minors
// only. Throws AdmissibilityError when |mu| degenerates.
MatrixField z_matrices(const PowerDensitySet& data, const SupportBasisCover& cover, int alpha);

// Per node: for each Z field the matrices {Z, Z H_(k) (e_p e_q^T - e_q e_p^T), p < q}.
struct MFamily {
  int n = 0;
  int members = 0;  // (1 + n(n-1)/2) * number of Z fields
  Field data;       // members * n * n per node, row-major per member

  Matrix member(std::int64_t node, int k) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.values().data() + (node * members + k) * n * n, n, n);
  }
};

MFamily m_family(const std::vector<MatrixField>& z_fields, const PowerDensitySet& data,
                 const SupportBasisCover& cover);

// F and the cross-product sum it normalizes, per node:
//   F    = sum_I (det(N(I) H_(k)^{-1} N(I)^T))^{1/n}
//   sum  = sum_I N(I) H_(k)^{-1} N(I)^T
// over the enumerated (n^2 - 1)-subsets I of the family (seeded subsample
// when `cap` is given). Negative round-off determinants are clamped to zero.
struct HyperplaneEvaluation {
  ScalarField f;
  MatrixField cross_sum;
};

HyperplaneEvaluation evaluate_hyperplane(const MFamily& family, const PowerDensitySet& data,
                                         const SupportBasisCover& cover,
                                         std::optional<std::int64_t> cap = {},
                                         std::uint64_t seed = 0);

ScalarField f_functional(const MFamily& family, const PowerDensitySet& data,
                         const SupportBasisCover& cover,
                         std::optional<std::int64_t> cap = {}, std::uint64_t seed = 0);

// Basis submatrix of H at a node for a given injection.
Matrix basis_submatrix(const PowerDensitySet& data, const std::vector<int>& inj,
                       std::int64_t node);
// Its per-axis derivative matrices, from the stored H gradients.
std::vector<Matrix> basis_submatrix_gradients(const PowerDensitySet& data,
                                              const std::vector<int>& inj, std::int64_t node);

}  // namespace pd
