#include "pd/bc_factory.hpp"

#include <cmath>

namespace pd {

BoundaryTrace quadratic_seed(const Matrix& gamma0, const Vector& x0, const Matrix& generator,
                             const std::string& label) {
  const Matrix a0 = matrix_sqrt(gamma0);
  const Matrix a0_inv = a0.inverse();
  const Matrix q = a0_inv * generator * a0_inv;
  return {label, [q, x0](const Vector& x) {
            const Vector d = x - x0;
            return 0.5 * d.dot(q * d);
          }};
}

BoundaryTraceSet constant_coefficient_seeds(const Matrix& gamma0, const Vector& x0,
                                            bool extend_2d) {
  require_spd(gamma0, "constant_coefficient_seeds gamma0");
  const int n = static_cast<int>(gamma0.rows());
  if (x0.size() != n) throw ConfigError("constant_coefficient_seeds: anchor dimension mismatch");

  BoundaryTraceSet set;
  for (int i = 0; i < n; ++i) {
    set.traces.push_back({"affine-" + std::to_string(i + 1), [i, x0](const Vector& x) {
                            return x(i) - x0(i);
                          }});
  }
  for (int j = 0; j + 1 < n; ++j) {
    Matrix gen = Matrix::Zero(n, n);
    gen(j, j) = 1.0;
    gen(j + 1, j + 1) = -1.0;
    set.traces.push_back(
        quadratic_seed(gamma0, x0, gen, "quadratic-" + std::to_string(j + 1)));
  }
  if (n == 2 && extend_2d) {
    Matrix gen = Matrix::Zero(2, 2);
    gen(0, 1) = gen(1, 0) = 1.0;
    set.traces.push_back(quadratic_seed(gamma0, x0, gen, "quadratic-offdiag-ext"));
  }
  return set;
}

Diffeomorphism make_diffeomorphism(const std::string& name, int dim,
                                   const std::vector<double>& params) {
  if (dim != 2 && dim != 3) throw ConfigError("make_diffeomorphism: dim must be 2 or 3");
  Diffeomorphism psi;
  psi.name = name;
  if (name == "identity") {
    psi.forward = [](const Vector& x) { return x; };
    psi.inverse = [](const Vector& x) { return x; };
    psi.jacobian = [dim](const Vector&) { return Matrix::Identity(dim, dim); };
    psi.jacobian_bound = 1.0;
    return psi;
  }
  if (name == "affine") {
    // params: s_1..s_dim, t_1..t_dim (scales then shifts); defaults below.
    Vector s(dim), t(dim);
    for (int a = 0; a < dim; ++a) {
      s(a) = params.size() > static_cast<std::size_t>(a) ? params[a] : 1.0 + 0.25 * (a + 1);
      t(a) = params.size() > static_cast<std::size_t>(dim + a) ? params[dim + a] : 0.1 * (a + 1);
      if (s(a) == 0.0) throw ConfigError("affine diffeomorphism: zero scale");
    }
    psi.forward = [s, t](const Vector& x) { return (s.array() * x.array()).matrix() + t; };
    psi.inverse = [s, t](const Vector& y) { return ((y - t).array() / s.array()).matrix(); };
    Matrix j = s.asDiagonal();
    psi.jacobian = [j](const Vector&) { return j; };
    const double dj = std::abs(s.prod());
    psi.jacobian_bound = std::max(dj, 1.0 / dj);
    return psi;
  }
  if (name == "shear-bump") {
    // Componentwise y_a = x_a + c_a x_a (1 - x_a) on [0,1]^dim; |c_a| < 1
    // keeps each factor monotone and fixes the faces x_a in {0,1}.
    Vector c(dim);
    for (int a = 0; a < dim; ++a) {
      c(a) = params.size() > static_cast<std::size_t>(a) ? params[a] : 0.3 / (a + 1);
      if (std::abs(c(a)) >= 1.0) throw ConfigError("shear-bump diffeomorphism: |strength| >= 1");
    }
    psi.forward = [c, dim](const Vector& x) {
      Vector y(dim);
      for (int a = 0; a < dim; ++a) y(a) = x(a) + c(a) * x(a) * (1.0 - x(a));
      return y;
    };
    psi.inverse = [c, dim](const Vector& y) {
      Vector x(dim);
      for (int a = 0; a < dim; ++a) {
        if (c(a) == 0.0) {
          x(a) = y(a);
        } else {
          // root of c t^2 - (1+c) t + y = 0 lying in [0,1]
          const double b = 1.0 + c(a);
          x(a) = 2.0 * y(a) / (b + std::sqrt(b * b - 4.0 * c(a) * y(a)));
        }
      }
      return x;
    };
    psi.jacobian = [c, dim](const Vector& x) {
      Matrix j = Matrix::Zero(dim, dim);
      for (int a = 0; a < dim; ++a) j(a, a) = 1.0 + c(a) * (1.0 - 2.0 * x(a));
      return j;
    };
    double lo = 1.0, hi = 1.0;
    for (int a = 0; a < dim; ++a) {
      lo *= 1.0 - std::abs(c(a));
      hi *= 1.0 + std::abs(c(a));
    }
    psi.jacobian_bound = std::max(hi, 1.0 / lo);
    return psi;
  }
  throw ConfigError("unknown diffeomorphism '" + name + "'");
}

TensorFn pushforward_tensor_fn(const TensorFn& gamma, const Diffeomorphism& psi) {
  return [gamma, psi](const Vector& y) {
    const Vector x = psi.inverse(y);
    const Matrix j = psi.jacobian(x);
    return Matrix((j * gamma(x) * j.transpose()) / std::abs(j.determinant()));
  };
}

MatrixField pushforward_tensor(const TensorFn& gamma, const Diffeomorphism& psi,
                               const Grid& target_grid) {
  const TensorFn pushed = pushforward_tensor_fn(gamma, psi);
  MatrixField out(target_grid);
  for (std::int64_t idx = 0; idx < target_grid.num_nodes(); ++idx) {
    out.set_mat(idx, pushed(target_grid.position(target_grid.multi_index(idx))));
  }
  return out;
}

MatrixField pushforward_tensor(const MatrixField& gamma, const Diffeomorphism& psi,
                               const Grid& target_grid) {
  const MatrixField* src = &gamma;
  TensorFn fn = [src](const Vector& x) { return interpolate_matrix(*src, x); };
  return pushforward_tensor(fn, psi, target_grid);
}

BoundaryTraceSet pushforward_traces(const BoundaryTraceSet& traces, const Diffeomorphism& psi) {
  BoundaryTraceSet out;
  for (const auto& t : traces.traces) {
    out.traces.push_back({t.label + "@" + psi.name, [t, psi](const Vector& y) {
                            return t.eval(psi.inverse(y));
                          }});
  }
  return out;
}

namespace {

// Weights and corner indices of the cell containing x (clamped to the grid).
struct CellLocator {
  MultiIndex base{0, 0, 0};
  Vector frac;
};

CellLocator locate(const Grid& g, const Vector& x) {
  CellLocator loc;
  loc.frac = Vector::Zero(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    double t = (x(a) - g.origin()(a)) / g.h(a);
    t = std::min(std::max(t, 0.0), static_cast<double>(g.points(a) - 1));
    int i = static_cast<int>(std::floor(t));
    if (i > g.points(a) - 2) i = g.points(a) - 2;
    loc.base[a] = i;
    loc.frac(a) = t - i;
  }
  return loc;
}

template <typename Accum>
void for_each_corner(const Grid& g, const CellLocator& loc, Accum&& acc) {
  const int corners = 1 << g.dim();
  for (int m = 0; m < corners; ++m) {
    MultiIndex mi = loc.base;
    double w = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      if (m & (1 << a)) {
        ++mi[a];
        w *= loc.frac(a);
      } else {
        w *= 1.0 - loc.frac(a);
      }
    }
    acc(g.index(mi), w);
  }
}

}  // namespace

double interpolate_scalar(const ScalarField& f, const Vector& x) {
  const Grid& g = f.grid();
  const CellLocator loc = locate(g, x);
  double s = 0.0;
  for_each_corner(g, loc, [&](std::int64_t idx, double w) { s += w * f.at(idx); });
  return s;
}

Matrix interpolate_matrix(const MatrixField& f, const Vector& x) {
  const Grid& g = f.grid();
  const CellLocator loc = locate(g, x);
  Matrix m = Matrix::Zero(f.rows(), f.cols());
  for_each_corner(g, loc, [&](std::int64_t idx, double w) { m += w * f.mat(idx); });
  return m;
}

}  // namespace pd
