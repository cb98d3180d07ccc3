#include <doctest.h>

#include <cmath>
#include <memory>

#include "pd/admissibility.hpp"
#include "pd/bc_factory.hpp"

using namespace pd;

namespace {

struct ConstantCase {
  std::shared_ptr<Grid> grid;
  Matrix gamma0;
  PowerDensitySet data;
  BoundaryTraceSet seeds;
};

ConstantCase make_constant_case(int dim, int pts) {
  ConstantCase cc;
  cc.grid = std::make_shared<Grid>(dim, std::vector<int>(dim, pts), Vector::Zero(dim),
                                   Vector::Constant(dim, 1.0 / (pts - 1)));
  cc.gamma0 = Matrix::Identity(dim, dim);
  cc.gamma0(0, 0) = 2.0;
  cc.gamma0(0, 1) = cc.gamma0(1, 0) = 0.4;
  MatrixField gamma(*cc.grid);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) gamma.set_mat(idx, cc.gamma0);
  cc.seeds = constant_coefficient_seeds(cc.gamma0, Vector::Constant(dim, 0.5));
  cc.data = synthesize(gamma, cc.seeds.fns(), {}, {1e-12, 0});
  return cc;
}

bool interior(const Grid& g, std::int64_t idx, int collar = 2) {
  const MultiIndex mi = g.multi_index(idx);
  for (int a = 0; a < g.dim(); ++a) {
    if (mi[a] < collar || mi[a] > g.points(a) - 1 - collar) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("determinant functional of the affine basis equals det gamma0") {
  const ConstantCase cc = make_constant_case(2, 9);
  const ScalarField d = det_functional(cc.data, 2);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    CHECK(d.at(idx) == doctest::Approx(cc.gamma0.determinant()).epsilon(1e-7));
  }
  // Widening the pool adds nonnegative minors.
  const ScalarField d4 = det_functional(cc.data, 4);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); idx += 7) {
    CHECK(d4.at(idx) >= d.at(idx) - 1e-9);
  }
}

TEST_CASE("cover selects the affine basis everywhere and honors its threshold") {
  const ConstantCase cc = make_constant_case(2, 9);
  const SupportBasisCover cover = build_cover(cc.data, 2, 1e-6, 4);
  CHECK(cover.m == 2);
  CHECK(cover.achieved_min == doctest::Approx(cc.gamma0.determinant()).epsilon(1e-7));
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    const auto& inj = cover.injection_at(idx);
    REQUIRE(inj.size() == 2);
    CHECK(inj[0] == 0);
    CHECK(inj[1] == 1);
  }
  CHECK_THROWS_AS(build_cover(cc.data, 2, 10.0 * cc.gamma0.determinant(), 4),
                  AdmissibilityError);
}

TEST_CASE("duplicated solutions degenerate the cover") {
  ConstantCase cc = make_constant_case(2, 9);
  // Overwrite the second solution's rows/columns with copies of the first.
  const int c = cc.data.count;
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    for (int j = 0; j < c; ++j) {
      cc.data.H.at(idx, 1 * c + j) = cc.data.H.at(idx, 0 * c + j);
      cc.data.H.at(idx, j * c + 1) = cc.data.H.at(idx, j * c + 0);
    }
    cc.data.H.at(idx, 1 * c + 1) = cc.data.H.at(idx, 0);
  }
  cc.data.refresh_gradients();
  const ScalarField d = det_functional(cc.data, 2);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); idx += 5) {
    CHECK(std::abs(d.at(idx)) <= 1e-10);
  }
  CHECK_THROWS_AS(build_cover(cc.data, 2, 1e-6, 4), AdmissibilityError);
}

TEST_CASE("Z matrices of quadratic seeds recover their generators") {
  const ConstantCase cc = make_constant_case(2, 17);
  const SupportBasisCover cover = build_cover(cc.data, 2, 1e-6, 8);
  const Matrix a0_inv = matrix_sqrt(cc.gamma0).inverse();

  Matrix gen_diag(2, 2), gen_off(2, 2);
  gen_diag << 1.0, 0.0, 0.0, -1.0;
  gen_off << 0.0, 1.0, 1.0, 0.0;
  // The dependence ratios carry the sign of the annihilating coefficients,
  // so each Z is the negated Hessian generator.
  const Matrix q2 = -a0_inv * gen_diag * a0_inv;
  const Matrix q3 = -a0_inv * gen_off * a0_inv;

  const MatrixField z2 = z_matrices(cc.data, cover, 2);
  const MatrixField z3 = z_matrices(cc.data, cover, 3);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    if (!interior(*cc.grid, idx)) continue;
    CHECK((z2.mat(idx) - q2).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((z3.mat(idx) - q3).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("matrix family has the expected cardinality and leading members") {
  const ConstantCase cc = make_constant_case(2, 9);
  const SupportBasisCover cover = build_cover(cc.data, 2, 1e-6, 4);
  std::vector<MatrixField> zs = {z_matrices(cc.data, cover, 2), z_matrices(cc.data, cover, 3)};
  const MFamily fam = m_family(zs, cc.data, cover);
  CHECK(fam.n == 2);
  CHECK(fam.members == 4);

  Matrix omega(2, 2);
  omega << 0.0, 1.0, -1.0, 0.0;
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); idx += 11) {
    const Matrix hk = basis_submatrix(cc.data, cover.injection_at(idx), idx);
    CHECK((fam.member(idx, 0) - zs[0].mat(idx)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fam.member(idx, 1) - zs[0].mat(idx) * hk * omega).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((fam.member(idx, 2) - zs[1].mat(idx)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("hyperplane functional vanishes structurally for planar constant tensors") {
  const ConstantCase cc = make_constant_case(2, 9);
  const SupportBasisCover cover = build_cover(cc.data, 2, 1e-6, 4);
  std::vector<MatrixField> zs = {z_matrices(cc.data, cover, 2), z_matrices(cc.data, cover, 3)};
  const MFamily fam = m_family(zs, cc.data, cover);
  const HyperplaneEvaluation ev = evaluate_hyperplane(fam, cc.data, cover);
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    if (!interior(*cc.grid, idx)) continue;
    CHECK(ev.f.at(idx) <= 1e-8);
  }
}

TEST_CASE("hyperplane functional is positive and uniform for a constant 3D tensor") {
  const ConstantCase cc = make_constant_case(3, 9);
  const SupportBasisCover cover = build_cover(cc.data, 3, 1e-6, 4);
  std::vector<MatrixField> zs = {z_matrices(cc.data, cover, 3), z_matrices(cc.data, cover, 4)};
  const MFamily fam = m_family(zs, cc.data, cover);
  CHECK(fam.members == 8);
  const ScalarField f = f_functional(fam, cc.data, cover);

  double fmin = 1e300, fmax = 0.0;
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); ++idx) {
    if (!interior(*cc.grid, idx)) continue;
    fmin = std::min(fmin, f.at(idx));
    fmax = std::max(fmax, f.at(idx));
  }
  CHECK(fmin > 0.0);
  CHECK((fmax - fmin) / fmax <= 1e-6);
}

TEST_CASE("basis submatrix gradients match the stored data gradients") {
  const ConstantCase cc = make_constant_case(2, 9);
  const std::vector<int> inj = {0, 2};
  for (std::int64_t idx = 0; idx < cc.grid->num_nodes(); idx += 13) {
    const Matrix hk = basis_submatrix(cc.data, inj, idx);
    CHECK(hk(0, 0) == doctest::Approx(cc.data.h_entry(idx, 0, 0)));
    CHECK(hk(0, 1) == doctest::Approx(cc.data.h_entry(idx, 0, 2)));
    CHECK(hk(1, 1) == doctest::Approx(cc.data.h_entry(idx, 2, 2)));
    const auto grads = basis_submatrix_gradients(cc.data, inj, idx);
    REQUIRE(grads.size() == 2);
    for (int a = 0; a < 2; ++a) {
      CHECK(grads[a](0, 1) == doctest::Approx(cc.data.grad_h_entry(idx, 0, 2)(a)));
      CHECK(grads[a](1, 1) == doctest::Approx(cc.data.grad_h_entry(idx, 2, 2)(a)));
    }
  }
}
