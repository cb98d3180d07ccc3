#pragma once

// Experiment plumbing shared by the command-line tool and the test harness:
// JSON config schema, the phantom catalog with closed-form ground truth,
// synthesis, admissibility checks, both reconstruction pipelines, the noise
// sweep, and the structural invariant suite.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pd/admissibility.hpp"
#include "pd/bc_factory.hpp"
#include "pd/field_io.hpp"
#include "pd/forward.hpp"
#include "pd/metrics.hpp"
#include "pd/recon_gamma.hpp"
#include "pd/recon_tau.hpp"

namespace pd {

struct GridSpec {
  int dim = 2;
  std::vector<int> points;
  Vector origin;
  Vector extent;

  Grid make() const;
};

// Ground-truth tensor with its closed-form evaluator.
struct Phantom {
  std::string name;
  TensorFn gamma;
};

// Catalog: "constant" (params.matrix or identity), "tau-sine"
// (tau = 1 + amp * prod sin(pi x^a) times a constant unit-determinant
// structure), "diagonal-smooth" (smooth SPD diagonal), "pushforward"
// (params.base phantom transported by params.diffeo).
Phantom make_phantom(const std::string& name, int dim, const nlohmann::json& params);

struct ExperimentConfig {
  GridSpec grid;
  std::string phantom_name = "constant";
  nlohmann::json phantom_params;
  std::string mode = "full";  // "tau" | "full"
  Vector x0;                  // trace anchor; empty -> domain center
  bool extend_2d = true;
  double c0 = 1e-6;
  double c1 = 1e-6;
  int block_size = 16;
  NoiseSpec noise;
  std::optional<std::int64_t> injection_cap;
  std::uint64_t injection_seed = 0;
  std::vector<double> stability_deltas = {1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
  std::uint64_t stability_seed = 1;
  SolveOptions solver;
  int substeps = 2;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct SynthesisResult {
  std::shared_ptr<Grid> grid;
  Phantom phantom;
  MatrixField gamma;  // ground truth sampled on the grid
  BoundaryTraceSet traces;
  PowerDensitySet data;
};

// Samples the phantom, builds the trace family (n affine seeds for "tau"
// mode; the full constant-coefficient family for "full" mode, anchored at
// x0 with the tensor frozen at the grid center), solves, synthesizes.
SynthesisResult run_synth(const ExperimentConfig& cfg);

// D infimum, cover summary, F infimum (full mode).
nlohmann::json run_check(const ExperimentConfig& cfg, const SynthesisResult& synth);

struct ReconOutputs {
  nlohmann::json report;
  FieldContainer fields;
};

ReconOutputs run_recon(const ExperimentConfig& cfg, const SynthesisResult& synth);

nlohmann::json run_stability(const ExperimentConfig& cfg, std::string* csv = nullptr);

// Structural invariant suite on ground-truth frames; each entry carries a
// residual, its threshold, and a pass flag.
nlohmann::json run_verify(const ExperimentConfig& cfg);

// Container round trip for synthesized data: per-pair scalar densities plus
// the sampled tensor.
FieldContainer data_to_container(const SynthesisResult& synth);
PowerDensitySet container_to_data(const FieldContainer& c);

}  // namespace pd
