#pragma once

// Algebraic reconstruction of the anisotropic structure via generalized cross
// products of the admissibility family, followed by a data-only gradient of
// log tau and its anchored path integration.

#include <cstdint>
#include <optional>
#include <vector>

#include "pd/admissibility.hpp"
#include "pd/forward.hpp"

namespace pd {

struct AnisotropyReconstruction {
  MatrixField gamma_tilde;           // symmetrized, determinant-renormalized
  ScalarField f_values;              // the normalizing functional
  ScalarField raw_det;               // det before renormalization
  std::vector<std::int64_t> flagged; // nodes with f below the threshold; left as identity
};

// gamma_tilde = (1 / F) sum_I N(I) H_(k)^{-1} N(I)^T, nodewise. Nodes where
// F < c1 are flagged and never divided. Throws AdmissibilityError when every
// node is flagged.
AnisotropyReconstruction reconstruct_anisotropy(const MFamily& family,
                                                const PowerDensitySet& data,
                                                const SupportBasisCover& cover, double c1,
                                                std::optional<std::int64_t> cap = {},
                                                std::uint64_t seed = 0);

// grad log tau = 2 / (n F |H|^{1/2}) sum_I (grad(|H|^{1/2} H^{jl}) . N(I)e_l)
// gamma_tilde^{-1} N(I) e_j, with the same injection enumeration as the F
// evaluation. Flagged nodes get a zero gradient.
VectorField grad_log_tau_data_only(const AnisotropyReconstruction& recon, const MFamily& family,
                                   const PowerDensitySet& data, const SupportBasisCover& cover,
                                   std::optional<std::int64_t> cap = {}, std::uint64_t seed = 0);

struct FullReconstruction {
  AnisotropyReconstruction aniso;
  VectorField grad_log_tau;
  ScalarField log_tau;
  ScalarField tau;
  MatrixField gamma;  // tau * gamma_tilde
};

// Full pipeline from the family: anisotropy, data-only gradient, tree
// integration of log tau anchored at (anchor_node, log_tau0), assembly.
FullReconstruction reconstruct_full(const MFamily& family, const PowerDensitySet& data,
                                    const SupportBasisCover& cover, double c1,
                                    std::int64_t anchor_node, double log_tau0,
                                    std::optional<std::int64_t> cap = {},
                                    std::uint64_t seed = 0);

}  // namespace pd
