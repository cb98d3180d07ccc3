#pragma once

// Reconstruction of log tau given the anisotropic structure: the explicit
// gradient formula for log tau in terms of the frame S_i = gamma^{1/2} grad u_i,
// the closed first-order system for the frame itself, its integration along
// staircase paths, and the anchored tree integration of log tau.

#include <cstdint>
#include <vector>

#include "pd/forward.hpp"
#include "pd/grid.hpp"

namespace pd {

// Pointwise data needed by the frame system: the n x n density matrix, its
// per-axis derivatives, the unit-determinant structure a = gamma_tilde^{1/2},
// and the per-axis derivatives of a.
struct FrameData {
  Matrix h;
  std::vector<Matrix> dh;  // per axis
  Matrix a;
  std::vector<Matrix> da;  // per axis

  Matrix h_inv;
  std::vector<Matrix> dh_inv;  // d(H^{-1}) = -H^{-1} dH H^{-1}
  Matrix a_inv;

  void finalize();  // fills the derived members
};

// Samples FrameData at a node from synthesized data (count must equal dim)
// and a structure field with its component gradients ([comp * dim + axis]).
FrameData frame_data_at(const PowerDensitySet& data, const MatrixField& a_tilde,
                        const Field& grad_a_tilde, std::int64_t node);

// grad log tau = (1/n) grad log det H + (2/n) (grad H^{jl} . a S_l) a^{-1} S_j.
Vector grad_log_tau_at(const Matrix& s, const FrameData& d);

// Same, evaluated nodewise from a frame field.
VectorField grad_log_tau(const MatrixField& s, const PowerDensitySet& data,
                         const MatrixField& a_tilde);

// Full Jacobians of the frame columns: result[i](c, a) = d_a S_i^c, assembled
// from the closed-form right-hand side (polynomial in S; data enters through
// H, dH, a, da only).
std::vector<Matrix> frame_rhs(const Matrix& s, const FrameData& d);

struct AnchorData {
  std::int64_t node = 0;
  Matrix s0;
  double log_tau0 = 0.0;
};

struct FrameState {
  Matrix s;
  std::int64_t node = 0;
  double gram_residual = 0.0;  // ||S^T S - H|| / ||H|| at the end point
};

// Propagates the frame along a staircase path by classical 4-stage explicit
// steps (substeps per cell segment), with FrameData interpolated linearly
// between segment endpoints.
FrameState integrate_frame(const AnchorData& anchor, const GridPath& path,
                           const PowerDensitySet& data, const MatrixField& a_tilde,
                           const Field& grad_a_tilde, int substeps = 2);

// Trapezoidal integration of a gradient field over the staircase spanning
// tree rooted at `anchor_node` (shared by both reconstruction pipelines).
ScalarField integrate_gradient_tree(const VectorField& grad, std::int64_t anchor_node,
                                    double anchor_value);

struct TauReconstruction {
  ScalarField log_tau;
  MatrixField frames;        // integrated frame at every node
  double max_gram_drift = 0.0;
  double two_path_residual = 0.0;  // max |log tau| gap over sampled alternate paths
};

// Integrates the frame over the spanning tree rooted at the anchor, evaluates
// grad log tau nodewise from the integrated frames, and line-integrates it
// over the same tree. `two_path_samples` nodes are re-integrated along the
// reversed-axis staircase as a compatibility diagnostic.
TauReconstruction reconstruct_log_tau(const PowerDensitySet& data, const MatrixField& a_tilde,
                                      const AnchorData& anchor, int substeps = 2,
                                      int two_path_samples = 16);

// Staircase from `from` to `to` taking the last axis first (the reverse of
// sample_path's ordering); used for the compatibility diagnostic.
GridPath sample_path_reversed(const Grid& grid, const MultiIndex& from, const MultiIndex& to);

// Anchor taken from ground truth: S(x0) = gamma(x0)^{1/2} [grad u_i] and the
// true log tau(x0).
AnchorData anchor_from_truth(const PowerDensitySet& data, const MatrixField& gamma,
                             std::int64_t node);

}  // namespace pd
