#include "pd/metrics.hpp"

#include <cmath>
#include <sstream>

namespace pd {

namespace {

bool in_interior(const Grid& g, const MultiIndex& mi, int collar) {
  for (int a = 0; a < g.dim(); ++a) {
    if (mi[a] < collar || mi[a] > g.points(a) - 1 - collar) return false;
  }
  return true;
}

}  // namespace

double linf_norm(const Field& f, int collar) {
  const Grid& g = f.grid();
  double mx = -1.0;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (!in_interior(g, g.multi_index(idx), collar)) continue;
    mx = std::max(mx, f.node(idx).cwiseAbs().maxCoeff());
  }
  if (mx < 0.0) throw ConfigError("linf_norm: collar leaves no nodes");
  return mx;
}

double w1inf_norm(const ScalarField& f, int collar) {
  const Grid& g = f.grid();
  double gmax = 0.0;
  if (collar == 0) {
    const VectorField grad = gradient(f);
    for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
      gmax = std::max(gmax, grad.vec(idx).norm());
    }
    return linf_norm(f, collar) + gmax;
  }
  // Gradient of the restriction to the collar-trimmed subdomain, so that
  // derivative stencils never reach outside it.
  std::vector<int> pts(g.dim());
  Vector origin = g.origin();
  for (int a = 0; a < g.dim(); ++a) {
    pts[a] = g.points(a) - 2 * collar;
    origin(a) += collar * g.h(a);
  }
  const Grid sub(g.dim(), pts, origin, g.spacing());
  ScalarField inner(sub);
  for (std::int64_t idx = 0; idx < sub.num_nodes(); ++idx) {
    MultiIndex mi = sub.multi_index(idx);
    for (int a = 0; a < g.dim(); ++a) mi[a] += collar;
    inner.at(idx) = f.at(g.index(mi));
  }
  const VectorField grad = gradient(inner);
  for (std::int64_t idx = 0; idx < sub.num_nodes(); ++idx) {
    gmax = std::max(gmax, grad.vec(idx).norm());
  }
  return linf_norm(f, collar) + gmax;
}

double data_w1inf_distance(const PowerDensitySet& a, const PowerDensitySet& b, int collar) {
  if (a.count != b.count || !(*a.grid == *b.grid)) {
    throw ConfigError("data_w1inf_distance: incompatible data sets");
  }
  const Grid& g = *a.grid;
  double vmax = 0.0, gmax = 0.0;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    if (!in_interior(g, g.multi_index(idx), collar)) continue;
    vmax = std::max(vmax, (a.H.node(idx) - b.H.node(idx)).cwiseAbs().maxCoeff());
    gmax = std::max(gmax, (a.grad_h.node(idx) - b.grad_h.node(idx)).cwiseAbs().maxCoeff());
  }
  return vmax + gmax;
}

std::array<double, 3> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int m = static_cast<int>(x.size());
  if (m < 2 || y.size() != x.size()) throw ConfigError("fit_line: need at least two points");
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    a(i, 0) = x[i];
    a(i, 1) = 1.0;
    rhs(i) = y[i];
  }
  const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(rhs);
  const double rms = std::sqrt((a * sol - rhs).squaredNorm() / m);
  return {sol(0), sol(1), rms};
}

StabilityFit stability_experiment(const PowerDensitySet& clean,
                                  const std::vector<double>& deltas, std::uint64_t seed,
                                  const std::vector<std::string>& error_names,
                                  const StabilityErrors& evaluate, int collar) {
  if (deltas.size() < 4) throw ConfigError("stability_experiment: need at least 4 noise levels");
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    if (deltas[i] <= deltas[i - 1]) {
      throw ConfigError("stability_experiment: noise levels must be strictly increasing");
    }
  }

  StabilityFit fit;
  fit.error_names = error_names;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const NoiseSpec noise{deltas[i], seed + i};
    const PowerDensitySet noisy = apply_noise(clean, noise);
    StabilityPoint pt;
    pt.delta = deltas[i];
    pt.data_distance = data_w1inf_distance(noisy, clean, collar);
    try {
      pt.errors = evaluate(noisy);
    } catch (const Error& e) {
      fit.truncated_at = static_cast<int>(i);
      fit.failure_message = e.what();
      break;
    }
    if (pt.errors.size() != error_names.size()) {
      throw ConfigError("stability_experiment: error count mismatch");
    }
    fit.points.push_back(pt);
  }
  if (fit.points.size() < 2) return fit;

  for (std::size_t k = 0; k < error_names.size(); ++k) {
    std::vector<double> x, y;
    for (const auto& pt : fit.points) {
      if (pt.errors[k] <= 0.0 || pt.data_distance <= 0.0) continue;
      x.push_back(std::log(pt.data_distance));
      y.push_back(std::log(pt.errors[k]));
    }
    if (x.size() < 2) {
      fit.slopes.push_back(0.0);
      fit.intercepts.push_back(0.0);
      fit.fit_residuals.push_back(0.0);
      continue;
    }
    const auto [slope, intercept, rms] = fit_line(x, y);
    fit.slopes.push_back(slope);
    fit.intercepts.push_back(intercept);
    fit.fit_residuals.push_back(rms);
  }
  return fit;
}

std::string stability_csv(const StabilityFit& fit) {
  std::ostringstream os;
  os << "delta,data_w1inf";
  for (const auto& name : fit.error_names) os << "," << name;
  os << "\n";
  os.precision(12);
  for (const auto& pt : fit.points) {
    os << pt.delta << "," << pt.data_distance;
    for (const double e : pt.errors) os << "," << e;
    os << "\n";
  }
  return os.str();
}

}  // namespace pd
