#pragma once

// Axis-aligned structured grid with node-centered scalar/vector/matrix
// fields, second-order finite-difference calculus, and staircase paths.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pd/errors.hpp"
#include "pd/tensor_algebra.hpp"

namespace pd {

using MultiIndex = std::array<int, 3>;  // unused trailing entries are 0

class Grid {
 public:
  Grid(int dim, std::vector<int> points_per_axis, Vector origin, Vector spacing);

  int dim() const { return dim_; }
  int points(int axis) const { return npts_[axis]; }
  const Vector& origin() const { return origin_; }
  const Vector& spacing() const { return spacing_; }
  double h(int axis) const { return spacing_(axis); }
  std::int64_t num_nodes() const { return num_nodes_; }

  // Node-major linear index, last axis fastest.
  std::int64_t index(const MultiIndex& mi) const {
    std::int64_t idx = 0;
    for (int a = 0; a < dim_; ++a) idx = idx * npts_[a] + mi[a];
    return idx;
  }
  MultiIndex multi_index(std::int64_t idx) const {
    MultiIndex mi{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      mi[a] = static_cast<int>(idx % npts_[a]);
      idx /= npts_[a];
    }
    return mi;
  }
  Vector position(const MultiIndex& mi) const {
    Vector x = origin_;
    for (int a = 0; a < dim_; ++a) x(a) += mi[a] * spacing_(a);
    return x;
  }
  bool is_boundary(const MultiIndex& mi) const {
    for (int a = 0; a < dim_; ++a) {
      if (mi[a] == 0 || mi[a] == npts_[a] - 1) return true;
    }
    return false;
  }
  MultiIndex center() const {
    MultiIndex c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) c[a] = npts_[a] / 2;
    return c;
  }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && npts_ == o.npts_ && origin_ == o.origin_ && spacing_ == o.spacing_;
  }

 private:
  int dim_;
  std::vector<int> npts_;
  Vector origin_;
  Vector spacing_;
  std::int64_t num_nodes_;
};

// Field with `comps` doubles per node, components contiguous per node.
class Field {
 public:
  Field() = default;
  Field(const Grid& grid, int comps)
      : grid_(&grid), comps_(comps), values_(Vector::Zero(grid.num_nodes() * comps)) {}

  const Grid& grid() const { return *grid_; }
  int comps() const { return comps_; }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  double& at(std::int64_t node, int c = 0) { return values_(node * comps_ + c); }
  double at(std::int64_t node, int c = 0) const { return values_(node * comps_ + c); }

  Eigen::Map<Vector> node(std::int64_t idx) {
    return Eigen::Map<Vector>(values_.data() + idx * comps_, comps_);
  }
  Eigen::Map<const Vector> node(std::int64_t idx) const {
    return Eigen::Map<const Vector>(values_.data() + idx * comps_, comps_);
  }

 private:
  const Grid* grid_ = nullptr;
  int comps_ = 0;
  Vector values_;
};

class ScalarField : public Field {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid) : Field(grid, 1) {}
};

class VectorField : public Field {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid) : Field(grid, grid.dim()) {}
  Eigen::Map<const Vector> vec(std::int64_t idx) const { return node(idx); }
};

// Matrix components stored row-major per node.
class MatrixField : public Field {
 public:
  MatrixField() = default;
  MatrixField(const Grid& grid, int rows, int cols)
      : Field(grid, rows * cols), rows_(rows), cols_(cols) {}
  explicit MatrixField(const Grid& grid)
      : MatrixField(grid, grid.dim(), grid.dim()) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Matrix mat(std::int64_t idx) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values().data() + idx * comps(), rows_, cols_);
  }
  void set_mat(std::int64_t idx, const Matrix& m) {
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values().data() + idx * comps(), rows_, cols_) = m;
  }

 private:
  int rows_ = 0, cols_ = 0;
};

// Second-order partial derivative of one component along one axis:
// central differences at interior nodes, 3-point one-sided at boundaries.
double partial_at(const Field& f, int comp, int axis, const MultiIndex& mi);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);

// Gradient of every component: result has comps = f.comps * dim, laid out
// as [comp * dim + axis] per node.
Field component_gradients(const Field& f);

struct GridPath {
  std::vector<std::int64_t> nodes;
};

// Axis-ordered staircase path (axis 0 first, then axis 1, ...).
GridPath sample_path(const Grid& grid, const MultiIndex& from, const MultiIndex& to);

// Spanning tree of staircase paths rooted at `root`: parent of a node is one
// step toward the root along the last axis that differs, so root-to-node tree
// paths coincide with sample_path. Nodes are emitted in integration order
// (parents before children).
struct SpanningTree {
  std::int64_t root;
  std::vector<std::int64_t> order;    // all nodes, root first
  std::vector<std::int64_t> parent;   // parent[node], -1 for root
};
SpanningTree spanning_tree(const Grid& grid, const MultiIndex& root);

}  // namespace pd
