#pragma once

// Divergence-form conductivity solver on the grid and power-density synthesis.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pd/grid.hpp"

namespace pd {

using TraceFn = std::function<double(const Vector&)>;

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0: default 50 * sqrt(nodes)
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
};

// Solves -div(gamma grad u) = 0 with Dirichlet data from `trace` evaluated at
// boundary nodes. gamma must be SPD at every node. Throws SolverError on
// non-convergence (message carries the final residual).
ScalarField solve_dirichlet(const MatrixField& gamma, const TraceFn& trace,
                            const SolveOptions& opts = {}, SolveReport* report = nullptr);

// Nodewise grad(u) . gamma grad(v), symmetric in (u, v) by construction.
ScalarField power_density(const ScalarField& u, const ScalarField& v, const MatrixField& gamma);

struct NoiseSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

// Mutual power densities of m+l solutions with their stored gradients.
struct PowerDensitySet {
  std::shared_ptr<Grid> grid;
  int count = 0;
  Field H;       // count*count per node, row-major, symmetric
  Field grad_h;  // count*count*dim per node: [(i*count+j)*dim + axis]
  // Ground-truth solution gradients, retained for anchors and oracle tests only.
  Field grad_u_truth;  // count*dim per node

  Matrix h_mat(std::int64_t idx) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        H.values().data() + idx * count * count, count, count);
  }
  double h_entry(std::int64_t idx, int i, int j) const { return H.at(idx, i * count + j); }
  Vector grad_h_entry(std::int64_t idx, int i, int j) const {
    const int d = grid->dim();
    Vector g(d);
    for (int a = 0; a < d; ++a) g(a) = grad_h.at(idx, (i * count + j) * d + a);
    return g;
  }
  Vector grad_u(std::int64_t idx, int i) const {
    const int d = grid->dim();
    Vector g(d);
    for (int a = 0; a < d; ++a) g(a) = grad_u_truth.at(idx, i * d + a);
    return g;
  }

  // Recomputes grad_h from the (possibly perturbed) H entries.
  void refresh_gradients();
};

// Solves all traces, fills H and grad H. With noise.delta > 0 each H_ij gets
// an iid uniform perturbation of amplitude delta * max|H| (symmetrized,
// deterministic under seed) before differentiation.
PowerDensitySet synthesize(const MatrixField& gamma, const std::vector<TraceFn>& traces,
                           const std::optional<NoiseSpec>& noise = {},
                           const SolveOptions& opts = {});

// Applies the synthesize noise model to an existing noiseless set.
PowerDensitySet apply_noise(const PowerDensitySet& clean, const NoiseSpec& noise);

}  // namespace pd
