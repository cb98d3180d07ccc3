#include <cmath>
#include <random>

#include "pd/pipeline.hpp"

// Structural invariant suite: discrete residuals of the identities underlying
// both reconstructions, evaluated on ground-truth frames from a noiseless
// synthesis. Exact-algebra identities are held to near machine precision;
// identities involving finite differences are held to scaled powers of h.

namespace pd {

using nlohmann::json;

namespace {

struct CheckAccum {
  json checks = json::array();
  bool all_pass = true;

  void add(const std::string& name, double residual, double threshold) {
    const bool pass = residual <= threshold;
    all_pass = all_pass && pass;
    checks.push_back({{"name", name},
                      {"residual", residual},
                      {"threshold", threshold},
                      {"pass", pass}});
  }
};

bool interior2(const Grid& g, std::int64_t idx) {
  const MultiIndex mi = g.multi_index(idx);
  for (int a = 0; a < g.dim(); ++a) {
    if (mi[a] < 2 || mi[a] > g.points(a) - 3) return false;
  }
  return true;
}

}  // namespace

json run_verify(const ExperimentConfig& cfg) {
  ExperimentConfig tau_cfg = cfg;
  tau_cfg.mode = "tau";
  tau_cfg.noise.delta = 0.0;
  const SynthesisResult synth = run_synth(tau_cfg);
  const Grid& g = *synth.grid;
  const int n = g.dim();
  double h = 0.0;
  for (int a = 0; a < n; ++a) h = std::max(h, g.h(a));

  // Ground-truth frame machinery.
  MatrixField a_field(g), at_field(g), s_field(g);
  ScalarField log_tau(g);
  std::vector<VectorField> w(n, VectorField(g));  // w_i = a_tilde S_i
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix gm = synth.gamma.mat(idx);
    const TensorDecomposition dec = decompose(gm);
    const Matrix a = std::sqrt(dec.tau) * dec.a_tilde;
    a_field.set_mat(idx, a);
    at_field.set_mat(idx, dec.a_tilde);
    log_tau.at(idx) = std::log(dec.tau);
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) s.col(i) = a * synth.data.grad_u(idx, i);
    s_field.set_mat(idx, s);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < n; ++c) w[i].at(idx, c) = (dec.a_tilde * s.col(i))(c);
    }
  }
  const VectorField grad_log_tau_true = gradient(log_tau);
  const double sigma0 = s_field.mat(g.index(g.center())).determinant() > 0 ? 1.0 : -1.0;

  CheckAccum acc;

  // Dual coframe: X_j . A^{-1} S_i = delta_ij sigma0 det(A^{-1} H^{1/2}),
  // and div X_j = 0 to discretization error.
  {
    double duality = 0.0;
    std::vector<VectorField> x(n, VectorField(g));
    double xmax = 0.0;
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      const Matrix hm = synth.data.h_mat(idx);
      const Matrix hinv = hm.inverse();
      const Matrix a = a_field.mat(idx);
      const Matrix s = s_field.mat(idx);
      const double d = std::sqrt(hm.determinant()) / a.determinant();
      for (int j = 0; j < n; ++j) {
        Vector xj = Vector::Zero(n);
        for (int l = 0; l < n; ++l) xj += sigma0 * hinv(j, l) * d * (a * s.col(l));
        for (int c = 0; c < n; ++c) x[j].at(idx, c) = xj(c);
        xmax = std::max(xmax, xj.norm());
        for (int i = 0; i < n; ++i) {
          const double got = xj.dot(a.inverse() * s.col(i));
          const double want = (i == j ? sigma0 * d : 0.0);
          duality = std::max(duality, std::abs(got - want) / d);
        }
      }
    }
    acc.add("coframe-duality", duality, 1e-8);
    double divmax = 0.0;
    for (int j = 0; j < n; ++j) {
      const ScalarField div = divergence(x[j]);
      for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
        if (interior2(g, idx)) divmax = std::max(divmax, std::abs(div.at(idx)));
      }
    }
    acc.add("coframe-divergence", divmax / std::max(xmax, 1e-300), 50.0 * h * h);
  }

  // Decomposition formulas V = H^{pq}(V . S_p) S_q and the M-weighted variant.
  {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist;
    double res = 0.0;
    const std::int64_t stride = std::max<std::int64_t>(1, g.num_nodes() / 64);
    for (std::int64_t idx = 0; idx < g.num_nodes(); idx += stride) {
      const Matrix hm = synth.data.h_mat(idx);
      const Matrix hinv = hm.inverse();
      const Matrix s = s_field.mat(idx);
      Vector v(n);
      for (int c = 0; c < n; ++c) v(c) = dist(rng);
      Matrix b(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) b(r, c) = dist(rng);
      const Matrix m = b * b.transpose() + Matrix::Identity(n, n);
      Vector rec = Vector::Zero(n);
      Vector rec_m = Vector::Zero(n);
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
          rec += hinv(p, q) * v.dot(s.col(p)) * s.col(q);
          rec_m += hinv(p, q) * v.dot(m * s.col(p)) * (m.inverse() * s.col(q));
        }
      }
      res = std::max(res, (rec - v).norm() / v.norm());
      res = std::max(res, (rec_m - v).norm() / v.norm());
    }
    acc.add("basis-decomposition", res, 1e-9);
  }

  // Lie brackets of the rotated frame against the data-side expression.
  {
    std::vector<Field> jac(n);
    for (int i = 0; i < n; ++i) jac[i] = component_gradients(w[i]);
    double res = 0.0, scale = 0.0;
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      if (!interior2(g, idx)) continue;
      const Matrix at = at_field.mat(idx);
      const Matrix at_inv = at.inverse();
      const Matrix s = s_field.mat(idx);
      const Matrix hm = synth.data.h_mat(idx);
      Vector gt(n);
      for (int c = 0; c < n; ++c) gt(c) = grad_log_tau_true.at(idx, c);
      auto jmat = [&](int i) {
        Matrix m(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) m(r, c) = jac[i].at(idx, r * n + c);
        return m;
      };
      for (int i = 0; i < n; ++i) {
        const Vector wi = w[i].vec(idx);
        for (int j = i + 1; j < n; ++j) {
          const Vector wj = w[j].vec(idx);
          const Vector bracket = jmat(j) * wi - jmat(i) * wj;
          for (int k = 0; k < n; ++k) {
            const double lhs = bracket.dot(at_inv * s.col(k));
            const double rhs = wi.dot(synth.data.grad_h_entry(idx, j, k)) -
                               wj.dot(synth.data.grad_h_entry(idx, i, k)) -
                               0.5 * hm(k, j) * gt.dot(wi) + 0.5 * hm(k, i) * gt.dot(wj);
            res = std::max(res, std::abs(lhs - rhs));
            scale = std::max(scale, std::abs(lhs));
          }
        }
      }
    }
    acc.add("bracket-formula", res / std::max(scale, 1.0), 20.0 * h);
  }

  // div(a_tilde S_i) + (1/2) grad log tau . a_tilde S_i = 0.
  {
    double res = 0.0, wmax = 0.0;
    for (int i = 0; i < n; ++i) {
      const ScalarField div = divergence(w[i]);
      for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
        wmax = std::max(wmax, w[i].vec(idx).norm());
        if (!interior2(g, idx)) continue;
        Vector gt(n);
        for (int c = 0; c < n; ++c) gt(c) = grad_log_tau_true.at(idx, c);
        res = std::max(res, std::abs(div.at(idx) + 0.5 * gt.dot(w[i].vec(idx))));
      }
    }
    acc.add("divergence-identity", res / std::max(wmax, 1e-300), 50.0 * h * h);
  }

  // Frame propagation drift of the Gram relation S^T S = H.
  {
    const AnchorData anchor =
        anchor_from_truth(synth.data, synth.gamma, g.index(g.center()));
    const TauReconstruction rec =
        reconstruct_log_tau(synth.data, at_field, anchor, cfg.substeps, 0);
    acc.add("gram-drift", rec.max_gram_drift, 50.0 * h * h);
  }

  // Orthogonality of the additional-solution matrices to a_tilde S (needs the
  // full trace family).
  if (cfg.mode == "full") {
    ExperimentConfig full_cfg = cfg;
    full_cfg.noise.delta = 0.0;
    const SynthesisResult fsynth = run_synth(full_cfg);
    const double scale = std::max(fsynth.data.H.values().cwiseAbs().maxCoeff(), 1e-300);
    const SupportBasisCover cover =
        build_cover(fsynth.data, n, cfg.c0 * std::pow(scale, n), cfg.block_size);
    double res = 0.0;
    for (int alpha = n; alpha < fsynth.data.count; ++alpha) {
      const MatrixField z = z_matrices(fsynth.data, cover, alpha);
      for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
        if (!interior2(g, idx)) continue;
        const Matrix as = at_field.mat(idx) * s_field.mat(idx);
        const Matrix zm = z.mat(idx);
        const Matrix hk = basis_submatrix(fsynth.data, cover.injection_at(idx), idx);
        const double denom = as.norm() * zm.norm() + 1e-300;
        res = std::max(res, std::abs(frobenius(as, zm)) / denom);
        for (int p = 0; p < n; ++p) {
          for (int q = p + 1; q < n; ++q) {
            Matrix omega = Matrix::Zero(n, n);
            omega(p, q) = 1.0;
            omega(q, p) = -1.0;
            const Matrix zho = zm * hk * omega;
            res = std::max(res,
                           std::abs(frobenius(as, zho)) / (as.norm() * zho.norm() + 1e-300));
          }
        }
      }
    }
    acc.add("frame-orthogonality", res, 50.0 * h * h);
  }

  json out;
  out["checks"] = acc.checks;
  out["all_pass"] = acc.all_pass;
  return out;
}

}  // namespace pd
