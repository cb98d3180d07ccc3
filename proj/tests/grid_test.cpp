#include <doctest.h>

#include <cmath>
#include <set>

#include "pd/grid.hpp"

using namespace pd;

namespace {

Grid unit_grid_2d(int pts = 9) {
  return Grid(2, {pts, pts}, Vector::Zero(2), Vector::Constant(2, 1.0 / (pts - 1)));
}

}  // namespace

TEST_CASE("grid indexing round-trips and positions are affine") {
  const Grid g(3, {9, 11, 13}, Vector::Zero(3), Vector::Constant(3, 0.1));
  for (std::int64_t idx = 0; idx < g.num_nodes(); idx += 37) {
    const MultiIndex mi = g.multi_index(idx);
    CHECK(g.index(mi) == idx);
    const Vector x = g.position(mi);
    for (int a = 0; a < 3; ++a) CHECK(x(a) == doctest::Approx(0.1 * mi[a]));
  }
  CHECK(g.is_boundary({0, 5, 5}));
  CHECK(g.is_boundary({3, 5, 12}));
  CHECK_FALSE(g.is_boundary({3, 5, 11}));
}

TEST_CASE("grid validates its construction arguments") {
  CHECK_THROWS_AS(Grid(4, {9, 9, 9, 9}, Vector::Zero(4), Vector::Ones(4)), ConfigError);
  CHECK_THROWS_AS(Grid(2, {8, 9}, Vector::Zero(2), Vector::Ones(2)), ConfigError);
  CHECK_THROWS_AS(Grid(2, {9, 9}, Vector::Zero(2), Vector::Zero(2)), ConfigError);
}

TEST_CASE("gradient is exact on affine fields and second order on smooth ones") {
  const Grid g = unit_grid_2d(17);
  ScalarField affine(g), smooth(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Vector x = g.position(g.multi_index(idx));
    affine.at(idx) = 2.0 * x(0) - 3.0 * x(1) + 0.5;
    smooth.at(idx) = std::sin(M_PI * x(0)) * std::sin(M_PI * x(1));
  }
  const VectorField ga = gradient(affine);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    CHECK(ga.at(idx, 0) == doctest::Approx(2.0));
    CHECK(ga.at(idx, 1) == doctest::Approx(-3.0));
  }

  // Interior error of the smooth field at two resolutions: order ~2.
  auto max_err = [](int pts) {
    const Grid gg = unit_grid_2d(pts);
    ScalarField f(gg);
    for (std::int64_t idx = 0; idx < gg.num_nodes(); ++idx) {
      const Vector x = gg.position(gg.multi_index(idx));
      f.at(idx) = std::sin(M_PI * x(0)) * std::sin(M_PI * x(1));
    }
    const VectorField grad = gradient(f);
    double err = 0.0;
    for (std::int64_t idx = 0; idx < gg.num_nodes(); ++idx) {
      const MultiIndex mi = gg.multi_index(idx);
      if (gg.is_boundary(mi)) continue;
      const Vector x = gg.position(mi);
      const double gx = M_PI * std::cos(M_PI * x(0)) * std::sin(M_PI * x(1));
      const double gy = M_PI * std::sin(M_PI * x(0)) * std::cos(M_PI * x(1));
      err = std::max(err, std::abs(grad.at(idx, 0) - gx));
      err = std::max(err, std::abs(grad.at(idx, 1) - gy));
    }
    return err;
  };
  const double order = std::log2(max_err(17) / max_err(33));
  CHECK(order > 1.7);
  CHECK(order < 2.3);
}

TEST_CASE("divergence matches the contraction of component gradients") {
  const Grid g = unit_grid_2d(13);
  VectorField v(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Vector x = g.position(g.multi_index(idx));
    v.at(idx, 0) = x(0) * x(0) + x(1);
    v.at(idx, 1) = std::exp(x(0)) * x(1);
  }
  const ScalarField div = divergence(v);
  const Field jac = component_gradients(v);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    CHECK(div.at(idx) == doctest::Approx(jac.at(idx, 0 * 2 + 0) + jac.at(idx, 1 * 2 + 1)));
  }
}

TEST_CASE("one-sided boundary stencils are exact for quadratics") {
  const Grid g = unit_grid_2d(9);
  ScalarField f(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Vector x = g.position(g.multi_index(idx));
    f.at(idx) = 3.0 * x(0) * x(0) - x(0) * x(1) + 2.0 * x(1) * x(1);
  }
  const VectorField grad = gradient(f);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Vector x = g.position(g.multi_index(idx));
    CHECK(grad.at(idx, 0) == doctest::Approx(6.0 * x(0) - x(1)));
    CHECK(grad.at(idx, 1) == doctest::Approx(-x(0) + 4.0 * x(1)));
  }
}

TEST_CASE("staircase paths step axis by axis and stay adjacent") {
  const Grid g = unit_grid_2d(9);
  const GridPath path = sample_path(g, {1, 2, 0}, {5, 7, 0});
  CHECK(path.nodes.size() == 1 + 4 + 5);
  CHECK(path.nodes.front() == g.index({1, 2, 0}));
  CHECK(path.nodes.back() == g.index({5, 7, 0}));
  for (std::size_t k = 1; k < path.nodes.size(); ++k) {
    const MultiIndex a = g.multi_index(path.nodes[k - 1]);
    const MultiIndex b = g.multi_index(path.nodes[k]);
    int moved = 0;
    for (int ax = 0; ax < 2; ++ax) moved += std::abs(a[ax] - b[ax]);
    CHECK(moved == 1);
  }
  // Axis 0 moves first.
  CHECK(g.multi_index(path.nodes[1])[0] == 2);
}

TEST_CASE("spanning tree covers every node, parents first, along staircase routes") {
  const Grid g = unit_grid_2d(9);
  const SpanningTree tree = spanning_tree(g, g.center());
  CHECK(static_cast<std::int64_t>(tree.order.size()) == g.num_nodes());
  CHECK(tree.order.front() == tree.root);
  CHECK(tree.parent[tree.root] == -1);

  std::set<std::int64_t> seen;
  for (const std::int64_t node : tree.order) {
    if (node != tree.root) {
      CHECK(seen.count(tree.parent[node]) == 1);
      // Tree path from root coincides with the staircase path.
      const GridPath path = sample_path(g, g.multi_index(tree.root), g.multi_index(node));
      CHECK(path.nodes[path.nodes.size() - 2] == tree.parent[node]);
    }
    seen.insert(node);
  }
  CHECK(static_cast<std::int64_t>(seen.size()) == g.num_nodes());
}
