#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "pd/bc_factory.hpp"
#include "pd/recon_gamma.hpp"

using namespace pd;

namespace {

struct Setup {
  std::shared_ptr<Grid> grid;
  MatrixField gamma;
  PowerDensitySet data;
  SupportBasisCover cover;
  MFamily family;
};

Setup make_setup(const std::function<Matrix(const Vector&)>& gamma_fn, int pts) {
  Setup s;
  const int n = 3;
  s.grid = std::make_shared<Grid>(n, std::vector<int>(n, pts), Vector::Zero(n),
                                  Vector::Constant(n, 1.0 / (pts - 1)));
  s.gamma = MatrixField(*s.grid);
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) {
    s.gamma.set_mat(idx, gamma_fn(s.grid->position(s.grid->multi_index(idx))));
  }
  const Vector x0 = Vector::Constant(n, 0.5);
  const BoundaryTraceSet seeds = constant_coefficient_seeds(gamma_fn(x0), x0);
  s.data = synthesize(s.gamma, seeds.fns(), {}, {1e-12, 0});
  s.cover = build_cover(s.data, n, 1e-9, 4);
  std::vector<MatrixField> zs;
  for (int alpha = n; alpha < s.data.count; ++alpha) {
    zs.push_back(z_matrices(s.data, s.cover, alpha));
  }
  s.family = m_family(zs, s.data, s.cover);
  return s;
}

bool interior(const Grid& g, std::int64_t idx, int collar = 2) {
  const MultiIndex mi = g.multi_index(idx);
  for (int a = 0; a < g.dim(); ++a) {
    if (mi[a] < collar || mi[a] > g.points(a) - 1 - collar) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("constant tensor: anisotropy, gradient, and full assembly are exact") {
  Matrix gamma0 = Matrix::Identity(3, 3);
  gamma0(0, 0) = 2.0;
  gamma0(0, 1) = gamma0(1, 0) = 0.4;
  gamma0(2, 2) = 1.5;
  const Setup s = make_setup([&](const Vector&) { return gamma0; }, 9);
  const TensorDecomposition dec = decompose(gamma0);

  const AnisotropyReconstruction aniso =
      reconstruct_anisotropy(s.family, s.data, s.cover, 1e-9);
  CHECK(aniso.flagged.empty());
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) {
    CHECK((aniso.gamma_tilde.mat(idx) - dec.gamma_tilde).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(aniso.gamma_tilde.mat(idx).determinant() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(aniso.f_values.at(idx) > 0.0);
  }

  const VectorField grad =
      grad_log_tau_data_only(aniso, s.family, s.data, s.cover);
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) {
    CHECK(grad.vec(idx).cwiseAbs().maxCoeff() <= 1e-6);
  }

  const std::int64_t anchor = s.grid->index(s.grid->center());
  const FullReconstruction full = reconstruct_full(
      s.family, s.data, s.cover, 1e-9, anchor, std::log(gamma0.determinant()) / 3.0);
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) {
    CHECK((full.gamma.mat(idx) - gamma0).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK(full.tau.at(idx) == doctest::Approx(dec.tau).epsilon(1e-6));
  }
}

TEST_CASE("an unreachable threshold flags every node and aborts") {
  Matrix gamma0 = Matrix::Identity(3, 3);
  gamma0(1, 2) = gamma0(2, 1) = 0.3;
  const Setup s = make_setup([&](const Vector&) { return gamma0; }, 9);
  CHECK_THROWS_AS(reconstruct_anisotropy(s.family, s.data, s.cover, 1e9),
                  AdmissibilityError);
}

TEST_CASE("partially flagged nodes are left as identity and get no gradient") {
  const auto gamma_fn = [](const Vector& x) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1.5 * std::exp(0.15 * std::sin(M_PI * x(0)) * std::sin(M_PI * x(1)));
    m(1, 1) = 1.0 * std::exp(0.15 * std::sin(M_PI * x(1)) * std::sin(M_PI * x(2)));
    m(2, 2) = 1.25 * std::exp(0.15 * std::sin(M_PI * x(2)) * std::sin(M_PI * x(0)));
    return m;
  };
  const Setup s = make_setup(gamma_fn, 9);
  const ScalarField f = f_functional(s.family, s.data, s.cover);

  // Threshold between the extremes of F so that only part of the grid flags.
  std::vector<double> vals;
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) vals.push_back(f.at(idx));
  std::sort(vals.begin(), vals.end());
  const double c1 = vals[vals.size() / 2];

  const AnisotropyReconstruction aniso = reconstruct_anisotropy(s.family, s.data, s.cover, c1);
  CHECK(aniso.flagged.size() > 0);
  CHECK(aniso.flagged.size() < static_cast<std::size_t>(s.grid->num_nodes()));
  const VectorField grad = grad_log_tau_data_only(aniso, s.family, s.data, s.cover);
  for (const std::int64_t idx : aniso.flagged) {
    CHECK((aniso.gamma_tilde.mat(idx) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grad.vec(idx).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("f_values of the reconstruction coincide with the functional") {
  Matrix gamma0 = Matrix::Identity(3, 3);
  gamma0(0, 0) = 1.8;
  const Setup s = make_setup([&](const Vector&) { return gamma0; }, 9);
  const AnisotropyReconstruction aniso =
      reconstruct_anisotropy(s.family, s.data, s.cover, 1e-9);
  const ScalarField f = f_functional(s.family, s.data, s.cover);
  CHECK((aniso.f_values.values() - f.values()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("smooth diagonal tensor is recovered on a moderate grid") {
  const auto gamma_fn = [](const Vector& x) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1.5 * std::exp(0.1 * std::sin(M_PI * x(0)) * std::sin(M_PI * x(1)));
    m(1, 1) = 1.0 * std::exp(0.1 * std::sin(M_PI * x(1)) * std::sin(M_PI * x(2)));
    m(2, 2) = 1.25;
    return m;
  };
  const Setup s = make_setup(gamma_fn, 17);
  const std::int64_t anchor = s.grid->index(s.grid->center());
  const Vector xc = s.grid->position(s.grid->center());
  const FullReconstruction full = reconstruct_full(
      s.family, s.data, s.cover, 1e-9, anchor, std::log(gamma_fn(xc).determinant()) / 3.0);

  double max_rel = 0.0;
  for (std::int64_t idx = 0; idx < s.grid->num_nodes(); ++idx) {
    if (!interior(*s.grid, idx)) continue;
    const Matrix truth = s.gamma.mat(idx);
    max_rel = std::max(max_rel,
                       (full.gamma.mat(idx) - truth).cwiseAbs().maxCoeff() /
                           truth.cwiseAbs().maxCoeff());
  }
  CHECK(max_rel <= 0.05);
}
