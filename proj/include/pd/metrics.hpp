#pragma once

// Error norms on node fields (with an interior collar) and the log-log
// stability fit used by the noise experiments.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pd/forward.hpp"
#include "pd/grid.hpp"

namespace pd {

// Max |f| over nodes at least `collar` cells away from every boundary face.
double linf_norm(const Field& f, int collar = 2);

// linf of the values plus linf of the finite-difference gradient magnitude.
double w1inf_norm(const ScalarField& f, int collar = 2);

// Max over nodes (interior collar) of the entrywise |H' - H| plus the same
// for every entry gradient: the discrete W^{1,inf} distance of two data sets.
double data_w1inf_distance(const PowerDensitySet& a, const PowerDensitySet& b, int collar = 2);

struct StabilityPoint {
  double delta = 0.0;
  double data_distance = 0.0;            // measured W^{1,inf} perturbation of H
  std::vector<double> errors;            // one per tracked norm
};

struct StabilityFit {
  std::vector<std::string> error_names;
  std::vector<StabilityPoint> points;
  std::vector<double> slopes;            // log-log slope per tracked norm
  std::vector<double> intercepts;
  std::vector<double> fit_residuals;     // rms residual of the linear fit
  int truncated_at = -1;                 // index of the first failing level, if any
  std::string failure_message;
};

// Reconstruction hook: maps a (possibly noisy) data set to the tracked error
// norms against the noiseless reconstruction.
using StabilityErrors = std::function<std::vector<double>(const PowerDensitySet&)>;

// For each delta: perturb `clean` with the shared noise model, measure the
// data perturbation, evaluate the errors; then fit log(error) against
// log(data_distance). Admissibility failures truncate the sweep.
StabilityFit stability_experiment(const PowerDensitySet& clean,
                                  const std::vector<double>& deltas, std::uint64_t seed,
                                  const std::vector<std::string>& error_names,
                                  const StabilityErrors& evaluate, int collar = 2);

// Least-squares line through (x_i, y_i); returns {slope, intercept, rms residual}.
std::array<double, 3> fit_line(const std::vector<double>& x, const std::vector<double>& y);

std::string stability_csv(const StabilityFit& fit);

}  // namespace pd
