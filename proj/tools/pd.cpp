// Batch front end: synthesize power densities, check admissibility, run the
// reconstructions, sweep noise levels, or run the invariant suite, all driven
// by a JSON config. Exit codes: 0 ok, 2 config, 3 solver, 4 admissibility,
// 5 io.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "pd/pipeline.hpp"

namespace {

using nlohmann::json;

void apply_thread_cap() {
  if (const char* env = std::getenv("PD_THREADS")) {
    const int threads = std::atoi(env);
    if (threads > 0) Eigen::setNbThreads(threads);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pd::IoError("cannot write " + path.string());
  out << text;
}

void emit(const json& report, const std::filesystem::path& out_dir,
          const std::string& name) {
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    write_text(out_dir / name, text);
  }
}

int dispatch(const std::string& cmd, const std::filesystem::path& config_path,
             const std::filesystem::path& out_dir) {
  const pd::ExperimentConfig cfg = pd::load_config(config_path);

  if (cmd == "synth") {
    const pd::SynthesisResult synth = pd::run_synth(cfg);
    if (out_dir.empty()) throw pd::ConfigError("synth requires --out");
    pd::write_container(out_dir / "data", pd::data_to_container(synth));
    json report;
    report["command"] = "synth";
    report["nodes"] = synth.grid->num_nodes();
    report["solutions"] = synth.data.count;
    report["container"] = (out_dir / "data").string();
    emit(report, out_dir, "synth.json");
    return 0;
  }
  if (cmd == "check") {
    const pd::SynthesisResult synth = pd::run_synth(cfg);
    json report = pd::run_check(cfg, synth);
    report["command"] = "check";
    emit(report, out_dir, "check.json");
    return 0;
  }
  if (cmd == "recon") {
    const pd::SynthesisResult synth = pd::run_synth(cfg);
    pd::ReconOutputs rec = pd::run_recon(cfg, synth);
    rec.report["command"] = "recon";
    emit(rec.report, out_dir, "recon.json");
    if (!out_dir.empty()) pd::write_container(out_dir / "reconstruction", rec.fields);
    return 0;
  }
  if (cmd == "stability") {
    std::string csv;
    json report = pd::run_stability(cfg, &csv);
    report["command"] = "stability";
    emit(report, out_dir, "stability.json");
    if (!out_dir.empty()) write_text(out_dir / "stability.csv", csv);
    return 0;
  }
  if (cmd == "verify") {
    json report = pd::run_verify(cfg);
    report["command"] = "verify";
    emit(report, out_dir, "verify.json");
    return report["all_pass"].get<bool>() ? 0 : 4;
  }
  throw pd::ConfigError("unknown command '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"power-density synthesis and conductivity reconstruction"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  for (const std::string name : {"synth", "check", "recon", "stability", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, config_path, out_dir);
  } catch (const pd::Error& e) {
    nlohmann::json err{{"error", e.what()}, {"code", e.exit_code()}};
    std::cerr << err.dump(2) << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", e.what()}, {"code", 1}};
    std::cerr << err.dump(2) << "\n";
    return 1;
  }
}
