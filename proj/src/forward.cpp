#include "pd/forward.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <random>

namespace pd {

namespace {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

void check_nodewise_spd(const MatrixField& gamma) {
  const Grid& g = gamma.grid();
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix m = gamma.mat(idx);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw SolverError("conductivity not symmetric at node " + std::to_string(idx));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues()(0) <= 0.0) {
      throw SolverError("ellipticity violated at node " + std::to_string(idx) +
                        ": smallest eigenvalue " + std::to_string(es.eigenvalues()(0)));
    }
  }
}

}  // namespace

ScalarField solve_dirichlet(const MatrixField& gamma, const TraceFn& trace,
                            const SolveOptions& opts, SolveReport* report) {
  const Grid& g = gamma.grid();
  const int dim = g.dim();
  check_nodewise_spd(gamma);

  // Interior unknown numbering.
  std::vector<std::int64_t> unknown_of_node(g.num_nodes(), -1);
  std::vector<std::int64_t> node_of_unknown;
  node_of_unknown.reserve(g.num_nodes());
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (!g.is_boundary(g.multi_index(idx))) {
      unknown_of_node[idx] = static_cast<std::int64_t>(node_of_unknown.size());
      node_of_unknown.push_back(idx);
    }
  }
  const std::int64_t n_unknowns = static_cast<std::int64_t>(node_of_unknown.size());

  ScalarField u(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    if (g.is_boundary(mi)) u.at(idx) = trace(g.position(mi));
  }

  std::vector<Triplet> trips;
  trips.reserve(n_unknowns * (dim == 2 ? 9 : 19));
  Vector rhs = Vector::Zero(n_unknowns);

  auto add = [&](std::int64_t row, const MultiIndex& col_mi, double coeff) {
    const std::int64_t col_idx = gamma.grid().index(col_mi);
    const std::int64_t col = unknown_of_node[col_idx];
    if (col >= 0) {
      trips.emplace_back(static_cast<int>(row), static_cast<int>(col), coeff);
    } else {
      rhs(row) -= coeff * u.at(col_idx);
    }
  };

  for (std::int64_t row = 0; row < n_unknowns; ++row) {
    const std::int64_t idx = node_of_unknown[row];
    const MultiIndex mi = g.multi_index(idx);
    const Matrix gc = gamma.mat(idx);

    // Diagonal terms: -d_a(g^aa d_a u) with half-node arithmetic averaging.
    for (int a = 0; a < dim; ++a) {
      MultiIndex plus = mi, minus = mi;
      ++plus[a];
      --minus[a];
      const double gp = 0.5 * (gc(a, a) + gamma.mat(g.index(plus))(a, a));
      const double gm = 0.5 * (gc(a, a) + gamma.mat(g.index(minus))(a, a));
      const double inv_h2 = 1.0 / (g.h(a) * g.h(a));
      add(row, mi, (gp + gm) * inv_h2);
      add(row, plus, -gp * inv_h2);
      add(row, minus, -gm * inv_h2);
    }

    // Mixed terms: -d_a(g^ab d_b u) - d_b(g^ab d_a u), symmetric cross stencil.
    for (int a = 0; a < dim; ++a) {
      for (int b = a + 1; b < dim; ++b) {
        const double w = 1.0 / (4.0 * g.h(a) * g.h(b));
        MultiIndex pa = mi, ma = mi, pb = mi, mb = mi;
        ++pa[a];
        --ma[a];
        ++pb[b];
        --mb[b];
        const double c_pa = gamma.mat(g.index(pa))(a, b);
        const double c_ma = gamma.mat(g.index(ma))(a, b);
        const double c_pb = gamma.mat(g.index(pb))(a, b);
        const double c_mb = gamma.mat(g.index(mb))(a, b);

        auto corner = [&](int da, int db) {
          MultiIndex c = mi;
          c[a] += da;
          c[b] += db;
          return c;
        };
        // -[c_pa (u_{+a+b} - u_{+a-b}) - c_ma (u_{-a+b} - u_{-a-b})
        //   + c_pb (u_{+a+b} - u_{-a+b}) - c_mb (u_{+a-b} - u_{-a-b})] * w
        add(row, corner(+1, +1), -w * (c_pa + c_pb));
        add(row, corner(+1, -1), w * (c_pa + c_mb));
        add(row, corner(-1, +1), w * (c_ma + c_pb));
        add(row, corner(-1, -1), -w * (c_ma + c_mb));
      }
    }
  }

  SparseMat A(n_unknowns, n_unknowns);
  A.setFromTriplets(trips.begin(), trips.end());

  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(opts.tol);
  const int max_iter =
      opts.max_iter > 0 ? opts.max_iter
                        : static_cast<int>(50.0 * std::sqrt(static_cast<double>(g.num_nodes())));
  cg.setMaxIterations(max_iter);
  cg.compute(A);

  // Start from zero; for homogeneous interior equations rhs carries the data.
  const Vector sol = cg.solve(rhs);
  if (report != nullptr) {
    report->iterations = static_cast<int>(cg.iterations());
    report->residual = cg.error();
  }
  if (cg.info() != Eigen::Success && cg.error() > opts.tol) {
    throw SolverError("conjugate gradient did not converge after " + std::to_string(max_iter) +
                      " iterations, final relative residual " + std::to_string(cg.error()));
  }
  for (std::int64_t row = 0; row < n_unknowns; ++row) u.at(node_of_unknown[row]) = sol(row);
  return u;
}

ScalarField power_density(const ScalarField& u, const ScalarField& v, const MatrixField& gamma) {
  const Grid& g = u.grid();
  if (!(g == v.grid()) || !(g == gamma.grid())) {
    throw ConfigError("power_density: fields on different grids");
  }
  const VectorField gu = gradient(u);
  const VectorField gv = gradient(v);
  const int dim = g.dim();
  ScalarField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix gc = gamma.mat(idx);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      s += gc(a, a) * gu.at(idx, a) * gv.at(idx, a);
      for (int b = a + 1; b < dim; ++b) {
        s += gc(a, b) * 0.5 *
             (gu.at(idx, a) * gv.at(idx, b) + gu.at(idx, b) * gv.at(idx, a)) * 2.0;
      }
    }
    out.at(idx) = s;
  }
  return out;
}

void PowerDensitySet::refresh_gradients() { grad_h = component_gradients(H); }

PowerDensitySet synthesize(const MatrixField& gamma, const std::vector<TraceFn>& traces,
                           const std::optional<NoiseSpec>& noise, const SolveOptions& opts) {
  const Grid& g = gamma.grid();
  const int dim = g.dim();
  const int count = static_cast<int>(traces.size());

  std::vector<VectorField> grads(count);
  for (int i = 0; i < count; ++i) {
    const ScalarField u = solve_dirichlet(gamma, traces[i], opts);
    grads[i] = gradient(u);
  }

  PowerDensitySet set;
  set.grid = std::make_shared<Grid>(g);
  set.count = count;
  set.H = Field(*set.grid, count * count);
  set.grad_u_truth = Field(*set.grid, count * dim);

  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const Matrix gc = gamma.mat(idx);
    for (int i = 0; i < count; ++i) {
      for (int a = 0; a < dim; ++a) set.grad_u_truth.at(idx, i * dim + a) = grads[i].at(idx, a);
    }
    for (int i = 0; i < count; ++i) {
      for (int j = i; j < count; ++j) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
          for (int b = 0; b < dim; ++b) {
            s += 0.5 * gc(a, b) *
                 (grads[i].at(idx, a) * grads[j].at(idx, b) +
                  grads[j].at(idx, a) * grads[i].at(idx, b));
          }
        }
        set.H.at(idx, i * count + j) = s;
        set.H.at(idx, j * count + i) = s;
      }
    }
  }

  if (noise && noise->delta > 0.0) {
    return apply_noise(set, *noise);
  }
  set.refresh_gradients();
  return set;
}

PowerDensitySet apply_noise(const PowerDensitySet& clean, const NoiseSpec& noise) {
  PowerDensitySet set = clean;
  const Grid& g = *set.grid;
  const int count = set.count;
  const double amp = noise.delta * set.H.values().cwiseAbs().maxCoeff();
  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    for (int i = 0; i < count; ++i) {
      for (int j = i; j < count; ++j) {
        const double e = dist(rng);
        set.H.at(idx, i * count + j) += e;
        if (j != i) set.H.at(idx, j * count + i) += e;
      }
    }
  }
  set.refresh_gradients();
  return set;
}

}  // namespace pd
