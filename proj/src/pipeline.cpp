#include "pd/pipeline.hpp"

#include <cmath>
#include <fstream>

namespace pd {

using nlohmann::json;

Grid GridSpec::make() const {
  if (static_cast<int>(points.size()) != dim || origin.size() != dim || extent.size() != dim) {
    throw ConfigError("grid spec: dim does not match points/origin/extent");
  }
  Vector spacing(dim);
  for (int a = 0; a < dim; ++a) {
    if (points[a] < 2) throw ConfigError("grid spec: too few points");
    spacing(a) = extent(a) / (points[a] - 1);
  }
  return Grid(dim, points, origin, spacing);
}

namespace {

Matrix matrix_from_json(const json& j, int dim) {
  Matrix m(dim, dim);
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw ConfigError("expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                      " matrix as nested arrays");
  }
  for (int r = 0; r < dim; ++r) {
    const auto& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw ConfigError("matrix row has wrong length");
    }
    for (int c = 0; c < dim; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

Matrix unit_det(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  return m / std::pow(m.determinant(), 1.0 / n);
}

}  // namespace

Phantom make_phantom(const std::string& name, int dim, const json& params) {
  Phantom ph;
  ph.name = name;
  if (name == "constant") {
    Matrix g0 = Matrix::Identity(dim, dim);
    if (params.contains("matrix")) {
      g0 = matrix_from_json(params["matrix"], dim);
    } else if (params.contains("diag")) {
      for (int a = 0; a < dim; ++a) g0(a, a) = params["diag"].at(a).get<double>();
    }
    require_spd(g0, "constant phantom tensor");
    ph.gamma = [g0](const Vector&) { return g0; };
    return ph;
  }
  if (name == "tau-sine") {
    const double amp = params.value("amplitude", 0.3);
    if (std::abs(amp) >= 1.0) throw ConfigError("tau-sine phantom: |amplitude| must be < 1");
    Matrix structure = Matrix::Identity(dim, dim);
    if (params.contains("structure")) {
      structure = unit_det(matrix_from_json(params["structure"], dim));
      require_spd(structure, "tau-sine structure");
    }
    ph.gamma = [amp, structure, dim](const Vector& x) {
      double tau = 1.0;
      double prod = 1.0;
      for (int a = 0; a < dim; ++a) prod *= std::sin(M_PI * x(a));
      tau += amp * prod;
      return Matrix(tau * structure);
    };
    return ph;
  }
  if (name == "diagonal-smooth") {
    const double eps = params.value("epsilon", 0.15);
    std::vector<double> base(dim);
    for (int a = 0; a < dim; ++a) {
      base[a] = params.contains("base") ? params["base"].at(a).get<double>()
                                        : 1.0 + 0.25 * ((a * 2) % 3);
    }
    ph.gamma = [eps, base, dim](const Vector& x) {
      Matrix g = Matrix::Zero(dim, dim);
      for (int a = 0; a < dim; ++a) {
        const int b = (a + 1) % dim;
        g(a, a) = base[a] * std::exp(eps * std::sin(M_PI * x(a)) * std::sin(M_PI * x(b)));
      }
      return g;
    };
    return ph;
  }
  if (name == "pushforward") {
    if (!params.contains("base") || !params.contains("diffeo")) {
      throw ConfigError("pushforward phantom needs base and diffeo specs");
    }
    const auto& base = params["base"];
    const Phantom inner = make_phantom(base.value("name", std::string("constant")), dim,
                                       base.value("params", json::object()));
    const auto& dj = params["diffeo"];
    std::vector<double> dparams;
    if (dj.contains("params")) dparams = dj["params"].get<std::vector<double>>();
    const Diffeomorphism psi =
        make_diffeomorphism(dj.value("name", std::string("shear-bump")), dim, dparams);
    ph.gamma = pushforward_tensor_fn(inner.gamma, psi);
    return ph;
  }
  throw ConfigError("unknown phantom '" + name + "'");
}

ExperimentConfig parse_config(const json& j) {
  if (j.value("version", 1) != 1) throw ConfigError("unsupported config version");
  ExperimentConfig cfg;
  const json gj = j.value("grid", json::object());
  cfg.grid.dim = gj.value("dim", 2);
  if (cfg.grid.dim != 2 && cfg.grid.dim != 3) throw ConfigError("grid dim must be 2 or 3");
  if (gj.contains("points") && gj["points"].is_array()) {
    cfg.grid.points = gj["points"].get<std::vector<int>>();
  } else {
    cfg.grid.points.assign(cfg.grid.dim, gj.value("points", 65));
  }
  cfg.grid.origin = Vector::Zero(cfg.grid.dim);
  cfg.grid.extent = Vector::Ones(cfg.grid.dim);
  if (gj.contains("origin")) {
    for (int a = 0; a < cfg.grid.dim; ++a) cfg.grid.origin(a) = gj["origin"].at(a).get<double>();
  }
  if (gj.contains("extent")) {
    for (int a = 0; a < cfg.grid.dim; ++a) cfg.grid.extent(a) = gj["extent"].at(a).get<double>();
  }

  const json pj = j.value("phantom", json::object());
  cfg.phantom_name = pj.value("name", std::string("constant"));
  cfg.phantom_params = pj.value("params", json::object());

  cfg.mode = j.value("mode", std::string("full"));
  if (cfg.mode != "tau" && cfg.mode != "full") throw ConfigError("mode must be 'tau' or 'full'");

  if (j.contains("x0")) {
    const auto v = j["x0"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != cfg.grid.dim) throw ConfigError("x0 has wrong dimension");
    cfg.x0 = Eigen::Map<const Vector>(v.data(), v.size());
  }
  const json tj = j.value("thresholds", json::object());
  cfg.c0 = tj.value("c0", 1e-6);
  cfg.c1 = tj.value("c1", 1e-6);
  cfg.block_size = j.value("block_size", 16);
  cfg.extend_2d = j.value("extend_2d", true);

  const json nj = j.value("noise", json::object());
  cfg.noise.delta = nj.value("delta", 0.0);
  cfg.noise.seed = nj.value("seed", std::uint64_t{1});
  if (cfg.noise.delta < 0.0) throw ConfigError("noise delta must be nonnegative");

  const json ij = j.value("injections", json::object());
  if (ij.contains("cap") && !ij["cap"].is_null()) {
    cfg.injection_cap = ij["cap"].get<std::int64_t>();
  }
  cfg.injection_seed = ij.value("seed", std::uint64_t{0});

  const json sj = j.value("stability", json::object());
  if (sj.contains("deltas")) cfg.stability_deltas = sj["deltas"].get<std::vector<double>>();
  cfg.stability_seed = sj.value("seed", std::uint64_t{1});

  const json oj = j.value("solver", json::object());
  cfg.solver.tol = oj.value("tol", 1e-10);
  cfg.solver.max_iter = oj.value("max_iter", 0);
  cfg.substeps = j.value("substeps", 2);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

SynthesisResult run_synth(const ExperimentConfig& cfg) {
  SynthesisResult out;
  out.grid = std::make_shared<Grid>(cfg.grid.make());
  const Grid& g = *out.grid;
  const int n = g.dim();
  out.phantom = make_phantom(cfg.phantom_name, n, cfg.phantom_params);

  out.gamma = MatrixField(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    out.gamma.set_mat(idx, out.phantom.gamma(g.position(g.multi_index(idx))));
  }

  Vector x0 = cfg.x0;
  if (x0.size() == 0) x0 = g.position(g.center());
  const Matrix g_ref = out.phantom.gamma(x0);
  BoundaryTraceSet seeds = constant_coefficient_seeds(g_ref, x0, cfg.extend_2d);
  if (cfg.mode == "tau") seeds.traces.resize(n);  // affine seeds only
  out.traces = seeds;

  std::optional<NoiseSpec> noise;
  if (cfg.noise.delta > 0.0) noise = cfg.noise;
  out.data = synthesize(out.gamma, out.traces.fns(), noise, cfg.solver);
  return out;
}

namespace {

double det_threshold(const ExperimentConfig& cfg, const PowerDensitySet& data) {
  const double scale = std::max(data.H.values().cwiseAbs().maxCoeff(), 1e-300);
  return cfg.c0 * std::pow(scale, data.grid->dim());
}

struct FamilyBundle {
  SupportBasisCover cover;
  std::vector<MatrixField> z_fields;
  MFamily family;
};

FamilyBundle build_family(const ExperimentConfig& cfg, const PowerDensitySet& data) {
  const int n = data.grid->dim();
  if (data.count <= n) {
    throw ConfigError("full reconstruction needs additional solutions beyond the basis");
  }
  FamilyBundle fb;
  fb.cover = build_cover(data, n, det_threshold(cfg, data), cfg.block_size);
  for (int alpha = n; alpha < data.count; ++alpha) {
    fb.z_fields.push_back(z_matrices(data, fb.cover, alpha));
  }
  fb.family = m_family(fb.z_fields, data, fb.cover);
  return fb;
}

double f_threshold(const ExperimentConfig& cfg, const ScalarField& f) {
  const double mx = f.values().maxCoeff();
  return cfg.c1 * std::max(mx, 1e-300);
}

ScalarField true_log_tau(const SynthesisResult& synth) {
  const Grid& g = *synth.grid;
  ScalarField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    out.at(idx) = std::log(synth.gamma.mat(idx).determinant()) / g.dim();
  }
  return out;
}

MatrixField a_tilde_field(const SynthesisResult& synth) {
  const Grid& g = *synth.grid;
  MatrixField out(g);
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    out.set_mat(idx, decompose(synth.gamma.mat(idx)).a_tilde);
  }
  return out;
}

ScalarField field_diff(const Field& a, const Field& b) {
  ScalarField d(a.grid());
  for (std::int64_t idx = 0; idx < a.grid().num_nodes(); ++idx) {
    d.at(idx) = (a.node(idx) - b.node(idx)).cwiseAbs().maxCoeff();
  }
  return d;
}

}  // namespace

json run_check(const ExperimentConfig& cfg, const SynthesisResult& synth) {
  const int n = synth.grid->dim();
  json out;
  const ScalarField d = det_functional(synth.data, n);
  out["det_functional"] = {{"infimum", d.values().minCoeff()},
                           {"maximum", d.values().maxCoeff()},
                           {"threshold", det_threshold(cfg, synth.data)}};
  if (cfg.mode == "full") {
    const FamilyBundle fb = build_family(cfg, synth.data);
    json blocks = json::array();
    for (const auto& b : fb.cover.blocks) {
      blocks.push_back({{"injection", b.injection}, {"min_det", b.min_det}});
    }
    out["cover"] = {{"blocks", blocks}, {"achieved_min", fb.cover.achieved_min}};
    const ScalarField f =
        f_functional(fb.family, synth.data, fb.cover, cfg.injection_cap, cfg.injection_seed);
    out["f_functional"] = {{"infimum", f.values().minCoeff()},
                           {"maximum", f.values().maxCoeff()},
                           {"threshold", f_threshold(cfg, f)}};
  }
  return out;
}

ReconOutputs run_recon(const ExperimentConfig& cfg, const SynthesisResult& synth) {
  const Grid& g = *synth.grid;
  const int n = g.dim();
  ReconOutputs out;
  out.fields.grid = synth.grid;
  const ScalarField lt_true = true_log_tau(synth);
  const std::int64_t anchor_node = g.index(g.center());

  if (cfg.mode == "tau") {
    const MatrixField at = a_tilde_field(synth);
    const AnchorData anchor = anchor_from_truth(synth.data, synth.gamma, anchor_node);
    const TauReconstruction rec =
        reconstruct_log_tau(synth.data, at, anchor, cfg.substeps);
    const ScalarField err = field_diff(rec.log_tau, lt_true);
    ScalarField diff(g);
    diff.values() = rec.log_tau.values() - lt_true.values();
    out.report["mode"] = "tau";
    out.report["log_tau_linf_error"] = linf_norm(err);
    out.report["log_tau_w1inf_error"] = w1inf_norm(diff);
    out.report["two_path_residual"] = rec.two_path_residual;
    out.report["max_gram_drift"] = rec.max_gram_drift;
    out.fields.fields.push_back({"log_tau", "scalar", rec.log_tau});
    return out;
  }

  const FamilyBundle fb = build_family(cfg, synth.data);
  const ScalarField f =
      f_functional(fb.family, synth.data, fb.cover, cfg.injection_cap, cfg.injection_seed);
  const FullReconstruction full =
      reconstruct_full(fb.family, synth.data, fb.cover, f_threshold(cfg, f), anchor_node,
                       lt_true.at(anchor_node), cfg.injection_cap, cfg.injection_seed);

  // Ground-truth comparisons.
  double gt_err = 0.0, det_drift = 0.0;
  for (std::int64_t idx = 0; idx < g.num_nodes(); ++idx) {
    const MultiIndex mi = g.multi_index(idx);
    bool interior = true;
    for (int a = 0; a < n; ++a) interior = interior && mi[a] >= 2 && mi[a] <= g.points(a) - 3;
    if (!interior) continue;
    const Matrix gt_true = decompose(synth.gamma.mat(idx)).gamma_tilde;
    gt_err = std::max(gt_err, (full.aniso.gamma_tilde.mat(idx) - gt_true).cwiseAbs().maxCoeff() /
                                  gt_true.cwiseAbs().maxCoeff());
    if (full.aniso.raw_det.at(idx) > 0.0) {
      det_drift = std::max(det_drift, std::abs(full.aniso.raw_det.at(idx) - 1.0));
    }
  }
  const ScalarField lt_err = field_diff(full.log_tau, lt_true);

  out.report["mode"] = "full";
  out.report["gamma_tilde_linf_rel_error"] = gt_err;
  out.report["log_tau_linf_error"] = linf_norm(lt_err);
  out.report["f_infimum"] = f.values().minCoeff();
  out.report["flagged_nodes"] = full.aniso.flagged.size();
  out.report["raw_det_drift"] = det_drift;
  out.fields.fields.push_back({"gamma_tilde", "matrix", full.aniso.gamma_tilde});
  out.fields.fields.push_back({"tau", "scalar", full.tau});
  out.fields.fields.push_back({"gamma", "matrix", full.gamma});
  out.fields.fields.push_back({"log_tau", "scalar", full.log_tau});
  return out;
}

json run_stability(const ExperimentConfig& cfg, std::string* csv) {
  ExperimentConfig clean_cfg = cfg;
  clean_cfg.noise.delta = 0.0;
  const SynthesisResult synth = run_synth(clean_cfg);
  const Grid& g = *synth.grid;
  const std::int64_t anchor_node = g.index(g.center());
  const ScalarField lt_true = true_log_tau(synth);

  std::vector<std::string> names;
  StabilityErrors evaluate;

  if (cfg.mode == "tau") {
    const MatrixField at = a_tilde_field(synth);
    const AnchorData anchor = anchor_from_truth(synth.data, synth.gamma, anchor_node);
    const auto baseline = std::make_shared<TauReconstruction>(
        reconstruct_log_tau(synth.data, at, anchor, cfg.substeps, 0));
    names = {"log_tau_w1inf"};
    evaluate = [at, anchor, baseline, cfg](const PowerDensitySet& noisy) {
      const TauReconstruction rec = reconstruct_log_tau(noisy, at, anchor, cfg.substeps, 0);
      ScalarField diff(rec.log_tau.grid());
      diff.values() = rec.log_tau.values() - baseline->log_tau.values();
      return std::vector<double>{w1inf_norm(diff)};
    };
  } else {
    const double lt0 = lt_true.at(anchor_node);
    auto reconstruct = [cfg, anchor_node, lt0](const PowerDensitySet& data) {
      const FamilyBundle fb = build_family(cfg, data);
      const ScalarField f =
          f_functional(fb.family, data, fb.cover, cfg.injection_cap, cfg.injection_seed);
      return reconstruct_full(fb.family, data, fb.cover, f_threshold(cfg, f), anchor_node, lt0,
                              cfg.injection_cap, cfg.injection_seed);
    };
    const auto baseline = std::make_shared<FullReconstruction>(reconstruct(synth.data));
    names = {"log_tau_w1inf", "gamma_tilde_linf", "grad_log_tau_linf"};
    evaluate = [baseline, reconstruct](const PowerDensitySet& noisy) {
      const FullReconstruction rec = reconstruct(noisy);
      ScalarField diff(rec.log_tau.grid());
      diff.values() = rec.log_tau.values() - baseline->log_tau.values();
      return std::vector<double>{
          w1inf_norm(diff),
          linf_norm(field_diff(rec.aniso.gamma_tilde, baseline->aniso.gamma_tilde)),
          linf_norm(field_diff(rec.grad_log_tau, baseline->grad_log_tau))};
    };
  }

  const StabilityFit fit = stability_experiment(synth.data, cfg.stability_deltas,
                                                cfg.stability_seed, names, evaluate);
  if (csv != nullptr) *csv = stability_csv(fit);

  json out;
  out["error_names"] = fit.error_names;
  out["slopes"] = fit.slopes;
  out["intercepts"] = fit.intercepts;
  out["fit_residuals"] = fit.fit_residuals;
  json pts = json::array();
  for (const auto& pt : fit.points) {
    pts.push_back(
        {{"delta", pt.delta}, {"data_w1inf", pt.data_distance}, {"errors", pt.errors}});
  }
  out["points"] = pts;
  if (fit.truncated_at >= 0) {
    out["truncated_at"] = fit.truncated_at;
    out["failure"] = fit.failure_message;
  }
  return out;
}

FieldContainer data_to_container(const SynthesisResult& synth) {
  FieldContainer c;
  c.grid = synth.grid;
  c.fields.push_back({"gamma", "matrix", synth.gamma});
  const int count = synth.data.count;
  for (int i = 0; i < count; ++i) {
    for (int j = i; j < count; ++j) {
      ScalarField h(*synth.grid);
      for (std::int64_t idx = 0; idx < synth.grid->num_nodes(); ++idx) {
        h.at(idx) = synth.data.h_entry(idx, i, j);
      }
      c.fields.push_back(
          {"H_" + std::to_string(i) + "_" + std::to_string(j), "scalar", h});
    }
  }
  return c;
}

PowerDensitySet container_to_data(const FieldContainer& c) {
  int count = 0;
  while (c.find("H_" + std::to_string(count) + "_" + std::to_string(count)) != nullptr) ++count;
  if (count == 0) throw IoError("container holds no power-density fields");
  PowerDensitySet data;
  data.grid = c.grid;
  data.count = count;
  data.H = Field(*c.grid, count * count);
  for (int i = 0; i < count; ++i) {
    for (int j = i; j < count; ++j) {
      const FieldEntry* e = c.find("H_" + std::to_string(i) + "_" + std::to_string(j));
      if (e == nullptr) throw IoError("container is missing a power-density pair");
      for (std::int64_t idx = 0; idx < c.grid->num_nodes(); ++idx) {
        data.H.at(idx, i * count + j) = e->values.at(idx);
        data.H.at(idx, j * count + i) = e->values.at(idx);
      }
    }
  }
  data.refresh_gradients();
  return data;
}

}  // namespace pd
