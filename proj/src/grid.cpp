#include "pd/grid.hpp"

#include <cmath>
#include <deque>

namespace pd {

Grid::Grid(int dim, std::vector<int> points_per_axis, Vector origin, Vector spacing)
    : dim_(dim), npts_(std::move(points_per_axis)), origin_(std::move(origin)),
      spacing_(std::move(spacing)) {
  if (dim_ < 2 || dim_ > 3) throw ConfigError("Grid: dim must be 2 or 3");
  if (static_cast<int>(npts_.size()) != dim_ || origin_.size() != dim_ || spacing_.size() != dim_) {
    throw ConfigError("Grid: inconsistent dimensions");
  }
  num_nodes_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (npts_[a] < 9) throw ConfigError("Grid: need at least 9 points per axis");
    if (npts_[a] % 2 == 0) throw ConfigError("Grid: points per axis must be odd");
    if (!(spacing_(a) > 0.0)) throw ConfigError("Grid: spacing must be positive");
    num_nodes_ *= npts_[a];
  }
}

double partial_at(const Field& f, int comp, int axis, const MultiIndex& mi) {
  const Grid& g = f.grid();
  const double h = g.h(axis);
  const int n = g.points(axis);
  MultiIndex a = mi, b = mi;
  if (mi[axis] == 0) {
    a[axis] = 1;
    b[axis] = 2;
    return (-3.0 * f.at(g.index(mi), comp) + 4.0 * f.at(g.index(a), comp) -
            f.at(g.index(b), comp)) /
           (2.0 * h);
  }
  if (mi[axis] == n - 1) {
    a[axis] = n - 2;
    b[axis] = n - 3;
    return (3.0 * f.at(g.index(mi), comp) - 4.0 * f.at(g.index(a), comp) +
            f.at(g.index(b), comp)) /
           (2.0 * h);
  }
  a[axis] = mi[axis] + 1;
  b[axis] = mi[axis] - 1;
  return (f.at(g.index(a), comp) - f.at(g.index(b), comp)) / (2.0 * h);
}

VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  VectorField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    for (int a = 0; a < g.dim(); ++a) out.at(idx, a) = partial_at(f, 0, a, mi);
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += partial_at(v, a, a, mi);
    out.at(idx) = s;
  }
  return out;
}

Field component_gradients(const Field& f) {
  const Grid& g = f.grid();
  Field out(g, f.comps() * g.dim());
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    for (int c = 0; c < f.comps(); ++c) {
      for (int a = 0; a < g.dim(); ++a) {
        out.at(idx, c * g.dim() + a) = partial_at(f, c, a, mi);
      }
    }
  }
  return out;
}

GridPath sample_path(const Grid& grid, const MultiIndex& from, const MultiIndex& to) {
  for (int a = 0; a < grid.dim(); ++a) {
    if (from[a] < 0 || from[a] >= grid.points(a) || to[a] < 0 || to[a] >= grid.points(a)) {
      throw ConfigError("sample_path: node outside grid");
    }
  }
  GridPath p;
  MultiIndex cur = from;
  p.nodes.push_back(grid.index(cur));
  for (int a = 0; a < grid.dim(); ++a) {
    const int step = (to[a] > cur[a]) ? 1 : -1;
    while (cur[a] != to[a]) {
      cur[a] += step;
      p.nodes.push_back(grid.index(cur));
    }
  }
  return p;
}

SpanningTree spanning_tree(const Grid& grid, const MultiIndex& root) {
  SpanningTree t;
  t.root = grid.index(root);
  t.parent.assign(grid.num_nodes(), -1);
  t.order.reserve(grid.num_nodes());

  // Parent: step the last differing axis toward the root, so the tree path
  // from the root matches sample_path's axis ordering.
  for (std::int64_t idx = 0; idx < grid.num_nodes(); ++idx) {
    if (idx == t.root) continue;
    MultiIndex mi = grid.multi_index(idx);
    for (int a = grid.dim() - 1; a >= 0; --a) {
      if (mi[a] != root[a]) {
        MultiIndex pmi = mi;
        pmi[a] += (root[a] > mi[a]) ? 1 : -1;
        t.parent[idx] = grid.index(pmi);
        break;
      }
    }
  }

  // BFS order from the root.
  std::vector<std::vector<std::int64_t>> children(grid.num_nodes());
  for (std::int64_t idx = 0; idx < grid.num_nodes(); ++idx) {
    if (t.parent[idx] >= 0) children[t.parent[idx]].push_back(idx);
  }
  std::deque<std::int64_t> queue{t.root};
  while (!queue.empty()) {
    const std::int64_t cur = queue.front();
    queue.pop_front();
    t.order.push_back(cur);
    for (std::int64_t c : children[cur]) queue.push_back(c);
  }
  if (static_cast<std::int64_t>(t.order.size()) != grid.num_nodes()) {
    throw ConfigError("spanning_tree: disconnected tree");
  }
  return t;
}

}  // namespace pd
