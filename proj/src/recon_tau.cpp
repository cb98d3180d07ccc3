#include "pd/recon_tau.hpp"

#include <cmath>
#include <random>

namespace pd {

void FrameData::finalize() {
  const int n = static_cast<int>(h.rows());
  h_inv = h.inverse();
  dh_inv.resize(dh.size());
  for (std::size_t a = 0; a < dh.size(); ++a) dh_inv[a] = -h_inv * dh[a] * h_inv;
  a_inv = a.inverse();
  (void)n;
}

FrameData frame_data_at(const PowerDensitySet& data, const MatrixField& a_tilde,
                        const Field& grad_a_tilde, std::int64_t node) {
  const int n = data.grid->dim();
  if (data.count != n) throw ConfigError("frame data needs exactly dim solutions");
  FrameData d;
  d.h = data.h_mat(node);
  d.dh = std::vector<Matrix>(n, Matrix(n, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < n; ++a) d.dh[a](i, j) = data.grad_h.at(node, (i * n + j) * n + a);
    }
  }
  d.a = a_tilde.mat(node);
  d.da = std::vector<Matrix>(n, Matrix(n, n));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int a = 0; a < n; ++a) d.da[a](r, c) = grad_a_tilde.at(node, (r * n + c) * n + a);
    }
  }
  d.finalize();
  return d;
}

Vector grad_log_tau_at(const Matrix& s, const FrameData& d) {
  const int n = static_cast<int>(s.rows());
  Vector out(n);
  for (int a = 0; a < n; ++a) out(a) = (d.h_inv * d.dh[a]).trace() / n;
  for (int j = 0; j < n; ++j) {
    const Vector ainv_sj = d.a_inv * s.col(j);
    for (int l = 0; l < n; ++l) {
      const Vector asl = d.a * s.col(l);
      double dot = 0.0;
      for (int a = 0; a < n; ++a) dot += d.dh_inv[a](j, l) * asl(a);
      out += (2.0 / n) * dot * ainv_sj;
    }
  }
  return out;
}

VectorField grad_log_tau(const MatrixField& s, const PowerDensitySet& data,
                         const MatrixField& a_tilde) {
  const Grid& g = *data.grid;
  const Field grad_a = component_gradients(a_tilde);
  VectorField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const FrameData d = frame_data_at(data, a_tilde, grad_a, idx);
    Eigen::Map<Vector>(out.values().data() + idx * g.dim(), g.dim()) =
        grad_log_tau_at(s.mat(idx), d);
  }
  return out;
}

std::vector<Matrix> frame_rhs(const Matrix& s, const FrameData& d) {
  const int n = static_cast<int>(s.rows());
  std::vector<Vector> as(n), ainv_s(n);
  for (int i = 0; i < n; ++i) {
    as[i] = d.a * s.col(i);
    ainv_s[i] = d.a_inv * s.col(i);
  }
  const Vector f = grad_log_tau_at(s, d);

  // Commutator fields of the structure's column slices, nonzero only for
  // variable anisotropy: c_lq = a^{-1} [a_l, a_q].
  bool variable = false;
  for (const auto& m : d.da) variable = variable || m.cwiseAbs().maxCoeff() > 0.0;
  std::vector<std::vector<Vector>> c;
  if (variable) {
    c.assign(n, std::vector<Vector>(n, Vector::Zero(n)));
    for (int l = 0; l < n; ++l) {
      for (int q = l + 1; q < n; ++q) {
        Vector br = Vector::Zero(n);
        for (int m = 0; m < n; ++m) {
          for (int j = 0; j < n; ++j) {
            br(m) += d.a(j, l) * d.da[j](m, q) - d.a(j, q) * d.da[j](m, l);
          }
        }
        c[l][q] = d.a_inv * br;
        c[q][l] = -c[l][q];
      }
    }
  }
  auto twist = [&](const Vector& u, const Vector& v) {
    Vector w = Vector::Zero(n);
    for (int l = 0; l < n; ++l) {
      for (int q = l + 1; q < n; ++q) w += (u(l) * v(q) - v(l) * u(q)) * c[l][q];
    }
    return w;
  };

  std::vector<Matrix> out(n);
  for (int i = 0; i < n; ++i) {
    Matrix m = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      Vector u_ik(n);
      for (int a = 0; a < n; ++a) {
        u_ik(a) = 0.0;
        for (int p = 0; p < n; ++p) u_ik(a) += d.dh[a](i, p) * d.h_inv(p, k);
      }
      m += 0.5 * (s.col(k) * u_ik.transpose() + (d.a * u_ik) * ainv_s[k].transpose());
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int a = 0; a < n; ++a) dot += d.dh_inv[a](j, k) * as[i](a);
        m += 0.5 * dot * s.col(j) * ainv_s[k].transpose();
      }
    }
    m += 0.5 * f.dot(as[i]) * d.a_inv - 0.5 * (d.a * f) * ainv_s[i].transpose();
    if (variable) {
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
          const double combo = twist(s.col(i), s.col(p)).dot(s.col(q)) +
                               twist(s.col(q), s.col(p)).dot(s.col(i)) -
                               twist(s.col(q), s.col(i)).dot(s.col(p));
          if (combo == 0.0) continue;
          for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
              m += 0.5 * d.h_inv(k, q) * d.h_inv(j, p) * combo * s.col(j) *
                   ainv_s[k].transpose();
            }
          }
        }
      }
    }
    out[i] = m;
  }
  return out;
}

namespace {

FrameData lerp_data(const FrameData& d0, const FrameData& d1, double t) {
  FrameData d;
  d.h = (1.0 - t) * d0.h + t * d1.h;
  d.a = (1.0 - t) * d0.a + t * d1.a;
  d.dh.resize(d0.dh.size());
  d.da.resize(d0.da.size());
  for (std::size_t a = 0; a < d0.dh.size(); ++a) {
    d.dh[a] = (1.0 - t) * d0.dh[a] + t * d1.dh[a];
    d.da[a] = (1.0 - t) * d0.da[a] + t * d1.da[a];
  }
  d.finalize();
  return d;
}

// One RK4 sweep of dS/dt = rhs(S, data(t)) . dx over t in [0, 1].
Matrix propagate_segment(const Matrix& s_in, const FrameData& d0, const FrameData& d1,
                         const Vector& dx, int substeps) {
  const int n = static_cast<int>(s_in.rows());
  auto deriv = [&](const Matrix& s, double t) {
    const FrameData d = lerp_data(d0, d1, t);
    const std::vector<Matrix> jac = frame_rhs(s, d);
    Matrix ds(n, n);
    for (int i = 0; i < n; ++i) ds.col(i) = jac[i] * dx;
    return ds;
  };
  Matrix s = s_in;
  const double dt = 1.0 / substeps;
  for (int step = 0; step < substeps; ++step) {
    const double t = step * dt;
    const Matrix k1 = deriv(s, t);
    const Matrix k2 = deriv(s + 0.5 * dt * k1, t + 0.5 * dt);
    const Matrix k3 = deriv(s + 0.5 * dt * k2, t + 0.5 * dt);
    const Matrix k4 = deriv(s + dt * k3, t + dt);
    s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

double gram_residual(const Matrix& s, const Matrix& h) {
  const double denom = std::max(h.norm(), 1e-300);
  return (s.transpose() * s - h).norm() / denom;
}

}  // namespace

FrameState integrate_frame(const AnchorData& anchor, const GridPath& path,
                           const PowerDensitySet& data, const MatrixField& a_tilde,
                           const Field& grad_a_tilde, int substeps) {
  const Grid& g = *data.grid;
  if (path.nodes.empty() || path.nodes.front() != anchor.node) {
    throw ConfigError("integrate_frame: path must start at the anchor node");
  }
  Matrix s = anchor.s0;
  FrameData d_prev = frame_data_at(data, a_tilde, grad_a_tilde, path.nodes.front());
  for (std::size_t k = 1; k < path.nodes.size(); ++k) {
    const FrameData d_next = frame_data_at(data, a_tilde, grad_a_tilde, path.nodes[k]);
    const Vector dx = g.position(g.multi_index(path.nodes[k])) -
                      g.position(g.multi_index(path.nodes[k - 1]));
    s = propagate_segment(s, d_prev, d_next, dx, substeps);
    d_prev = d_next;
  }
  FrameState st;
  st.s = s;
  st.node = path.nodes.back();
  st.gram_residual = gram_residual(s, d_prev.h);
  return st;
}

ScalarField integrate_gradient_tree(const VectorField& grad, std::int64_t anchor_node,
                                    double anchor_value) {
  const Grid& g = grad.grid();
  const SpanningTree tree = spanning_tree(g, g.multi_index(anchor_node));
  ScalarField out(g);
  out.at(anchor_node) = anchor_value;
  for (const std::int64_t node : tree.order) {
    const std::int64_t p = tree.parent[node];
    if (p < 0) continue;
    const Vector dx = g.position(g.multi_index(node)) - g.position(g.multi_index(p));
    out.at(node) = out.at(p) + 0.5 * (grad.vec(p) + grad.vec(node)).dot(dx);
  }
  return out;
}

GridPath sample_path_reversed(const Grid& grid, const MultiIndex& from, const MultiIndex& to) {
  GridPath path;
  MultiIndex cur = from;
  path.nodes.push_back(grid.index(cur));
  for (int a = grid.dim() - 1; a >= 0; --a) {
    while (cur[a] != to[a]) {
      cur[a] += to[a] > cur[a] ? 1 : -1;
      path.nodes.push_back(grid.index(cur));
    }
  }
  return path;
}

AnchorData anchor_from_truth(const PowerDensitySet& data, const MatrixField& gamma,
                             std::int64_t node) {
  const int n = data.grid->dim();
  AnchorData anchor;
  anchor.node = node;
  const Matrix g0 = gamma.mat(node);
  const Matrix a = matrix_sqrt(g0);
  anchor.s0 = Matrix(n, n);
  for (int i = 0; i < n; ++i) anchor.s0.col(i) = a * data.grad_u(node, i);
  anchor.log_tau0 = std::log(g0.determinant()) / n;
  return anchor;
}

TauReconstruction reconstruct_log_tau(const PowerDensitySet& data, const MatrixField& a_tilde,
                                      const AnchorData& anchor, int substeps,
                                      int two_path_samples) {
  const Grid& g = *data.grid;
  const int n = g.dim();
  const Field grad_a = component_gradients(a_tilde);
  const SpanningTree tree = spanning_tree(g, g.multi_index(anchor.node));

  TauReconstruction rec;
  rec.frames = MatrixField(g, n, n);
  rec.frames.set_mat(anchor.node, anchor.s0);

  std::vector<FrameData> cache;  // per-node data, assembled on first use
  std::vector<char> cached(g.num_nodes(), 0);
  cache.resize(g.num_nodes());
  auto node_data = [&](std::int64_t idx) -> const FrameData& {
    if (!cached[idx]) {
      cache[idx] = frame_data_at(data, a_tilde, grad_a, idx);
      cached[idx] = 1;
    }
    return cache[idx];
  };

  for (const std::int64_t node : tree.order) {
    const std::int64_t p = tree.parent[node];
    if (p < 0) continue;
    const Vector dx = g.position(g.multi_index(node)) - g.position(g.multi_index(p));
    const Matrix s = propagate_segment(rec.frames.mat(p), node_data(p), node_data(node), dx,
                                       substeps);
    rec.frames.set_mat(node, s);
    rec.max_gram_drift = std::max(rec.max_gram_drift, gram_residual(s, node_data(node).h));
  }

  VectorField grad_lt(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    Eigen::Map<Vector>(grad_lt.values().data() + idx * n, n) =
        grad_log_tau_at(rec.frames.mat(idx), node_data(idx));
  }
  rec.log_tau = integrate_gradient_tree(grad_lt, anchor.node, anchor.log_tau0);

  // Compatibility diagnostic: re-integrate along the reversed-axis staircase
  // to a sample of nodes and compare the accumulated log tau.
  if (two_path_samples > 0) {
    std::mt19937_64 rng(0x7f3a2c55u);
    std::uniform_int_distribution<std::int64_t> pick(0, g.num_nodes() - 1);
    const MultiIndex from = g.multi_index(anchor.node);
    for (int sample = 0; sample < two_path_samples; ++sample) {
      const std::int64_t idx = pick(rng);
      const GridPath path = sample_path_reversed(g, from, g.multi_index(idx));
      Matrix s = anchor.s0;
      double lt = anchor.log_tau0;
      Vector f_prev = grad_log_tau_at(s, node_data(path.nodes.front()));
      for (std::size_t k = 1; k < path.nodes.size(); ++k) {
        const Vector dx = g.position(g.multi_index(path.nodes[k])) -
                          g.position(g.multi_index(path.nodes[k - 1]));
        s = propagate_segment(s, node_data(path.nodes[k - 1]), node_data(path.nodes[k]), dx,
                              substeps);
        const Vector f_cur = grad_log_tau_at(s, node_data(path.nodes[k]));
        lt += 0.5 * (f_prev + f_cur).dot(dx);
        f_prev = f_cur;
      }
      rec.two_path_residual =
          std::max(rec.two_path_residual, std::abs(lt - rec.log_tau.at(idx)));
    }
  }
  return rec;
}

}  // namespace pd
