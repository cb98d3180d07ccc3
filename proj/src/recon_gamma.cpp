#include "pd/recon_gamma.hpp"

#include <cmath>

#include "pd/recon_tau.hpp"

namespace pd {

AnisotropyReconstruction reconstruct_anisotropy(const MFamily& family,
                                                const PowerDensitySet& data,
                                                const SupportBasisCover& cover, double c1,
                                                std::optional<std::int64_t> cap,
                                                std::uint64_t seed) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  const HyperplaneEvaluation ev = evaluate_hyperplane(family, data, cover, cap, seed);

  AnisotropyReconstruction rec;
  rec.gamma_tilde = MatrixField(g, n, n);
  rec.f_values = ev.f;
  rec.raw_det = ScalarField(g);

  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const double f = ev.f.at(idx);
    if (!(f >= c1)) {
      rec.flagged.push_back(idx);
      rec.gamma_tilde.set_mat(idx, Matrix::Identity(n, n));
      rec.raw_det.at(idx) = 0.0;
      continue;
    }
    Matrix gt = ev.cross_sum.mat(idx) / f;
    gt = 0.5 * (gt + gt.transpose()).eval();
    const double det = gt.determinant();
    rec.raw_det.at(idx) = det;
    if (det <= 0.0) {
      rec.flagged.push_back(idx);
      rec.gamma_tilde.set_mat(idx, Matrix::Identity(n, n));
      continue;
    }
    rec.gamma_tilde.set_mat(idx, gt / std::pow(det, 1.0 / n));
  }
  if (static_cast<std::int64_t>(rec.flagged.size()) == g.num_nodes()) {
    throw AdmissibilityError("hyperplane functional below threshold " + std::to_string(c1) +
                             " at every node");
  }
  return rec;
}

VectorField grad_log_tau_data_only(const AnisotropyReconstruction& recon, const MFamily& family,
                                   const PowerDensitySet& data, const SupportBasisCover& cover,
                                   std::optional<std::int64_t> cap, std::uint64_t seed) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  const int nn1 = n * n - 1;
  const auto injections = enumerate_injections(nn1, family.members, cap, seed);

  std::vector<char> is_flagged(g.num_nodes(), 0);
  for (const std::int64_t idx : recon.flagged) is_flagged[idx] = 1;

  VectorField out(g);
  std::vector<Matrix> subset(nn1);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (is_flagged[idx]) continue;
    const auto& inj = cover.injection_at(idx);
    const Matrix hk = basis_submatrix(data, inj, idx);
    const std::vector<Matrix> dhk = basis_submatrix_gradients(data, inj, idx);
    const Matrix hk_inv = hk.inverse();
    const double det_h = hk.determinant();
    const double sqrt_det = std::sqrt(det_h);

    // Per-axis derivative of W = |H|^{1/2} H^{-1}.
    std::vector<Matrix> dw(n);
    for (int a = 0; a < n; ++a) {
      const double dlogdet = (hk_inv * dhk[a]).trace();
      dw[a] = sqrt_det * (0.5 * dlogdet * hk_inv - hk_inv * dhk[a] * hk_inv);
    }

    const Matrix gt_inv = recon.gamma_tilde.mat(idx).inverse();
    Vector acc = Vector::Zero(n);
    for (const auto& I : injections) {
      for (int k = 0; k < nn1; ++k) subset[k] = family.member(idx, I.indices[k]);
      const Matrix nmat = cross_product_matrices(subset);
      for (int j = 0; j < n; ++j) {
        double coeff = 0.0;
        for (int l = 0; l < n; ++l) {
          for (int a = 0; a < n; ++a) coeff += dw[a](j, l) * nmat(a, l);
        }
        acc += coeff * gt_inv * nmat.col(j);
      }
    }
    const double f = recon.f_values.at(idx);
    Eigen::Map<Vector>(out.values().data() + idx * n, n) =
        (2.0 / (n * f * sqrt_det)) * acc;
  }
  return out;
}

FullReconstruction reconstruct_full(const MFamily& family, const PowerDensitySet& data,
                                    const SupportBasisCover& cover, double c1,
                                    std::int64_t anchor_node, double log_tau0,
                                    std::optional<std::int64_t> cap, std::uint64_t seed) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  FullReconstruction full;
  full.aniso = reconstruct_anisotropy(family, data, cover, c1, cap, seed);
  full.grad_log_tau = grad_log_tau_data_only(full.aniso, family, data, cover, cap, seed);
  full.log_tau = integrate_gradient_tree(full.grad_log_tau, anchor_node, log_tau0);
  full.tau = ScalarField(g);
  full.gamma = MatrixField(g, n, n);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    full.tau.at(idx) = std::exp(full.log_tau.at(idx));
    full.gamma.set_mat(idx, full.tau.at(idx) * full.aniso.gamma_tilde.mat(idx));
  }
  return full;
}

}  // namespace pd
