#pragma once

// Boundary-condition families (affine and quadratic seed solutions of the
// constant-coefficient problem) and transport of tensors, traces, and data
// under catalog diffeomorphisms.

#include <functional>
#include <string>
#include <vector>

#include "pd/forward.hpp"
#include "pd/grid.hpp"

namespace pd {

struct BoundaryTrace {
  std::string label;
  TraceFn eval;
};

struct BoundaryTraceSet {
  std::vector<BoundaryTrace> traces;

  std::vector<TraceFn> fns() const {
    std::vector<TraceFn> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(t.eval);
    return out;
  }
};

// Seed solutions anchored at x0 for the constant tensor gamma0:
//   u_i = x^i - x0^i                            (i = 1..n)
//   u_{n+j} = (x-x0) . Q_j (x-x0) / 2,  Q_j = A0^{-1} Hm_j A0^{-1}
// with Hm_j = e_j x e^j - e_{j+1} x e^{j+1}. For n = 2 the single quadratic
// seed spans too small a space, so a third quadratic with the symmetric
// off-diagonal generator e_1 x e^2 + e_2 x e^1 is emitted as well (an
// extension over the constant-coefficient family; flagged in its label).
BoundaryTraceSet constant_coefficient_seeds(const Matrix& gamma0, const Vector& x0,
                                            bool extend_2d = true);

// Quadratic trace for an arbitrary symmetric generator Hm (u = (x-x0).Q(x-x0)/2,
// Q = A0^{-1} Hm A0^{-1}).
BoundaryTrace quadratic_seed(const Matrix& gamma0, const Vector& x0, const Matrix& generator,
                             const std::string& label);

struct Diffeomorphism {
  std::string name;
  std::function<Vector(const Vector&)> forward;
  std::function<Vector(const Vector&)> inverse;
  std::function<Matrix(const Vector&)> jacobian;  // D Psi at x
  double jacobian_bound = 1.0;                    // C_Psi in C^-1 <= |det D Psi| <= C
};

// Catalog: "identity"; "affine" (componentwise scale + shift);
// "shear-bump" (componentwise quadratic bump t -> t + a t (1 - t) on [0,1],
// boundary-fixing, closed-form inverse).
Diffeomorphism make_diffeomorphism(const std::string& name, int dim,
                                   const std::vector<double>& params = {});

// Push-forward of a tensor field: (|J|^-1 DPsi gamma DPsi^T) o Psi^{-1},
// with gamma supplied as a closed-form evaluator.
using TensorFn = std::function<Matrix(const Vector&)>;
MatrixField pushforward_tensor(const TensorFn& gamma, const Diffeomorphism& psi,
                               const Grid& target_grid);

// Same with gamma sampled on a source grid (multilinear interpolation).
MatrixField pushforward_tensor(const MatrixField& gamma, const Diffeomorphism& psi,
                               const Grid& target_grid);

// Closed-form push-forward evaluator.
TensorFn pushforward_tensor_fn(const TensorFn& gamma, const Diffeomorphism& psi);

// g o Psi^{-1} for every trace.
BoundaryTraceSet pushforward_traces(const BoundaryTraceSet& traces, const Diffeomorphism& psi);

// Multilinear interpolation helpers.
double interpolate_scalar(const ScalarField& f, const Vector& x);
Matrix interpolate_matrix(const MatrixField& f, const Vector& x);

}  // namespace pd
