#include <doctest.h>

#include <cmath>
#include <memory>

#include "pd/forward.hpp"

using namespace pd;

namespace {

std::shared_ptr<Grid> unit_grid(int dim, int pts) {
  return std::make_shared<Grid>(dim, std::vector<int>(dim, pts), Vector::Zero(dim),
                                Vector::Constant(dim, 1.0 / (pts - 1)));
}

MatrixField constant_field(const Grid& g, const Matrix& m) {
  MatrixField f(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) f.set_mat(idx, m);
  return f;
}

}  // namespace

TEST_CASE("affine traces are reproduced exactly by the constant-tensor solve") {
  auto grid = unit_grid(2, 17);
  Matrix gamma0(2, 2);
  gamma0 << 2.0, 0.5, 0.5, 1.0;
  const MatrixField gamma = constant_field(*grid, gamma0);

  const TraceFn trace = [](const Vector& x) { return 3.0 * x(0) - 2.0 * x(1) + 0.7; };
  const ScalarField u = solve_dirichlet(gamma, trace);
  for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
    const Vector x = grid->position(grid->multi_index(idx));
    CHECK(u.at(idx) == doctest::Approx(trace(x)).epsilon(1e-8));
  }
}

TEST_CASE("discretely harmonic quadratics pass through the Laplace solve") {
  auto grid = unit_grid(2, 17);
  const MatrixField gamma = constant_field(*grid, Matrix::Identity(2, 2));
  const TraceFn trace = [](const Vector& x) { return x(0) * x(0) - x(1) * x(1); };
  const ScalarField u = solve_dirichlet(gamma, trace, {1e-12, 0});
  for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
    const Vector x = grid->position(grid->multi_index(idx));
    CHECK(u.at(idx) == doctest::Approx(trace(x)).epsilon(1e-8));
  }
}

TEST_CASE("solver rejects indefinite tensors and reports non-convergence") {
  auto grid = unit_grid(2, 9);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(
      solve_dirichlet(constant_field(*grid, bad), [](const Vector& x) { return x(0); }),
      SolverError);

  // A single iteration cannot resolve an oscillatory trace.
  const MatrixField gamma = constant_field(*grid, Matrix::Identity(2, 2));
  SolveOptions opts;
  opts.tol = 1e-14;
  opts.max_iter = 1;
  CHECK_THROWS_AS(solve_dirichlet(
                      gamma, [](const Vector& x) { return std::sin(7.0 * x(0)) * x(1); }, opts),
                  SolverError);
}

TEST_CASE("power density is symmetric and matches the quadratic form") {
  auto grid = unit_grid(2, 9);
  Matrix gamma0(2, 2);
  gamma0 << 1.5, 0.3, 0.3, 0.8;
  const MatrixField gamma = constant_field(*grid, gamma0);
  ScalarField u(*grid), v(*grid);
  for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
    const Vector x = grid->position(grid->multi_index(idx));
    u.at(idx) = x(0) + 2.0 * x(1);
    v.at(idx) = -x(0) + 0.5 * x(1);
  }
  const ScalarField huv = power_density(u, v, gamma);
  const ScalarField hvu = power_density(v, u, gamma);
  Vector gu(2), gv(2);
  gu << 1.0, 2.0;
  gv << -1.0, 0.5;
  const double expect = gu.dot(gamma0 * gv);
  for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
    CHECK(huv.at(idx) == doctest::Approx(expect));
    CHECK(huv.at(idx) == doctest::Approx(hvu.at(idx)));
  }
}

TEST_CASE("synthesis of affine seeds yields H equal to the constant tensor") {
  for (int dim : {2, 3}) {
    auto grid = unit_grid(dim, 9);
    Matrix gamma0 = Matrix::Identity(dim, dim);
    gamma0(0, 0) = 2.0;
    gamma0(0, 1) = gamma0(1, 0) = 0.4;
    const MatrixField gamma = constant_field(*grid, gamma0);

    std::vector<TraceFn> traces;
    for (int i = 0; i < dim; ++i) {
      traces.push_back([i](const Vector& x) { return x(i); });
    }
    const PowerDensitySet data = synthesize(gamma, traces);
    REQUIRE(data.count == dim);
    for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
      CHECK((data.h_mat(idx) - gamma0).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(data.grad_h_entry(idx, 0, 1).cwiseAbs().maxCoeff() <= 1e-6);
      for (int i = 0; i < dim; ++i) {
        const Vector gu = data.grad_u(idx, i);
        for (int a = 0; a < dim; ++a) {
          CHECK(gu(a) == doctest::Approx(a == i ? 1.0 : 0.0).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("noise is deterministic, symmetric, bounded, and refreshes gradients") {
  auto grid = unit_grid(2, 9);
  const MatrixField gamma = constant_field(*grid, Matrix::Identity(2, 2));
  std::vector<TraceFn> traces = {[](const Vector& x) { return x(0); },
                                 [](const Vector& x) { return x(1); }};
  const PowerDensitySet clean = synthesize(gamma, traces);
  const double hmax = clean.H.values().cwiseAbs().maxCoeff();

  const NoiseSpec spec{1e-2, 42};
  const PowerDensitySet a = apply_noise(clean, spec);
  const PowerDensitySet b = apply_noise(clean, spec);
  const PowerDensitySet c = apply_noise(clean, {1e-2, 43});
  CHECK((a.H.values() - b.H.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.H.values() - c.H.values()).cwiseAbs().maxCoeff() > 0.0);

  double max_pert = 0.0;
  for (std::int64_t idx = 0; idx < grid->num_nodes(); ++idx) {
    const Matrix d = a.h_mat(idx) - clean.h_mat(idx);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
    max_pert = std::max(max_pert, d.cwiseAbs().maxCoeff());
  }
  CHECK(max_pert <= 1e-2 * hmax);
  CHECK(max_pert > 1e-3 * hmax);
  // Gradients follow the perturbed values.
  CHECK((a.grad_h.values() - clean.grad_h.values()).cwiseAbs().maxCoeff() > 0.0);
}
