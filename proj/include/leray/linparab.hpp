#pragma once

#include <memory>
#include <vector>

#include "leray/grid_fields.hpp"

namespace leray {

enum class BackendKind { reference_imex, duhamel_parametrix };
enum class Advection { upwind1, upwind3 };

struct Backend {
  BackendKind kind = BackendKind::reference_imex;
  int substeps = 16;
  Advection advection = Advection::upwind3;
  /// Order of the d_k expansion used by the Duhamel backend.
  int param_order = 1;
};

/// u_tau = D Laplacian(u) + b . grad(u) + S on [0, horizon], per component.
/// `drift` and `source` hold one field (frozen) or one per substep interval;
/// an empty `source` means no source.
struct LinearProblem {
  double diffusion = 1.0;
  std::vector<VField> drift;
  std::vector<VField> source;
  VField initial;
  double horizon = 1.0;
};

struct Trajectory {
  std::vector<double> tau;
  std::vector<VField> values;

  const VField& final() const { return values.back(); }
};

/// Implicit spectral diffusion plus explicit upwind advection and source.
/// Owns its FFT plans, so one instance should be reused across many solves
/// on the same grid.
class ImexSolver {
 public:
  explicit ImexSolver(const Grid& g);
  ~ImexSolver();

  const Grid& grid() const { return grid_; }

  Trajectory solve(const LinearProblem& p, const Backend& b);

  /// Upwind-biased b . grad(u); the stencil leans against the transport
  /// direction -b.
  Field advect(const Field& u, const VField& b, Advection adv) const;

  /// Solves (1 - c Laplacian) u = rhs; periodic or zero outside the box.
  Field implicit_diffusion(const Field& rhs, double c);

 private:
  struct Impl;
  Grid grid_;
  std::unique_ptr<Impl> impl_;
};

/// max over nodes of dt * sum_j |b_j| / h.
double cfl_number(const VField& b, double dt);

Trajectory solve_cauchy(const LinearProblem& p, const Backend& b);

/// Runs both backends and returns the sup discrepancy of the final values.
/// Throws BackendDisagreement above `tol` when `tol` > 0.
double cross_validate(const LinearProblem& p, double tol = 0.0, int substeps = 32);

}  // namespace leray
