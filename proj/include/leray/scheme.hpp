#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "leray/control.hpp"
#include "leray/linparab.hpp"

namespace leray {

enum class ScheduleMode { decreasing_paper, uniform_section4 };

struct StepSchedule {
  ScheduleMode mode = ScheduleMode::uniform_section4;
  /// Decreasing mode: rho_l = min(C / l, cap).
  double C = 0.5;
  /// Uniform mode: fixed step; 0 picks the largest T / m below the l = 1 cap.
  double rho = 0.0;
};

/// Throws CapCollapse when the cap falls below 1e-8.
double rho_schedule(int l, const BoundsLedger& ledger, const StepSchedule& schedule);

/// Sum_{l <= N} 1 / l.
double harmonic_sum(long n);

struct IterationOptions {
  Backend backend;
  /// Absolute tolerance on |dv^k|_{1,2}; 0 means 1e-8 * C_{1,2}.
  double tol = 0.0;
  int kmax = 25;
  bool leray = true;
};

struct IterationState {
  int k = 0;
  /// |dv^k|_{1,2} for k >= 1 (index 0 holds k = 1).
  std::vector<double> delta12;
  std::vector<double> delta_h2;
  std::vector<double> ratios;
  bool converged = false;

  double sum_delta() const;
  double max_ratio() const;
  double final_ratio() const { return ratios.empty() ? 0.0 : ratios.back(); }
};

/// |u|_{1,2} over a trajectory: max_tau |u|_{1,2}-in-space plus max_tau |u_tau|.
double trajectory_norm12(const Trajectory& u);

/// Shared per-grid machinery of a march.
class SchemeContext {
 public:
  SchemeContext(const Grid& g, double nu, bool leray);
  ~SchemeContext();

  const Grid& grid() const { return grid_; }
  double nu() const { return nu_; }
  bool leray() const { return op_ != nullptr; }
  ImexSolver& solver() { return *solver_; }
  LerayOperator& op();

 private:
  Grid grid_;
  double nu_;
  std::unique_ptr<ImexSolver> solver_;
  std::unique_ptr<LerayOperator> op_;
};

struct LocalResult {
  Trajectory w;
  IterationState state;
};

/// Alternative (iii): k = 0 freezes drift and Leray term at w_init; k >= 1
/// uses the previous iterate along the trajectory. `r` is the control
/// trajectory on the same substeps (empty means r = 0).
/// Throws NoContraction when the ratio exceeds 1 on three consecutive k.
LocalResult local_fixed_point(SchemeContext& ctx, const VField& w_init, const Trajectory& r, double rho,
                              const IterationOptions& opt, double c12);

/// |psi^{l,0} - phi|_{0,1}, max over the substep samples, with
/// psi - phi = -rho (r - r0).grad r + rho (Leray r - Leray r0) + rho (r - r0).grad w
///             + rho w.grad (r - r0) - 2 rho B(r - r0, w).
double psi_gap_diagnostic(LerayOperator& op, const Trajectory& r, const VField& r_prev, const VField& w_prev,
                          double rho);

/// The same quantity assembled directly from the scheme's source terms, for
/// cross-checking: r_tau from the r equation plus L(r; w) plus rho Leray(w) minus phi.
double psi_gap_assembled(LerayOperator& op, const Trajectory& r, const VField& r_prev, const VField& w_prev,
                         const ConsumptionField& phi, double rho, double nu);

struct StepReport {
  int l = 0;
  double rho = 0.0;
  double t = 0.0;
  int iterations = 0;
  int retries = 0;
  double final_ratio = 0.0;
  double max_ratio = 0.0;
  double sum_delta = 0.0;
  double sup_vr = 0.0;
  double h2_vr = 0.0;
  double sup_r = 0.0;
  double h2_r = 0.0;
  double sup_v = 0.0;
  double h2_v = 0.0;
  double div_v = 0.0;
  double integral_magnitude = 0.0;
  double psi_gap = 0.0;
  double s01 = 0.0;
  /// Controls on: consumption against the source over the step's bands.
  DominanceReport dominance;
  bool contraction_ok = true;
  bool sum_ok = true;
  bool max_principle_ok = true;
  bool ledger_ok = true;
};

struct MarchOptions {
  StepSchedule schedule;
  double T = 1.0;
  bool controls = false;
  bool leray = true;
  /// r^1 = 0 on the first step.
  bool paper_faithful = true;
  PhiModulation modulation = PhiModulation::constant;
  IterationOptions iteration;
  int max_retries = 6;
  int max_steps = 1000000;
  /// Burgers mode: assert sup|u| non-increasing within eps each step.
  bool max_principle = false;
  double max_principle_eps = 0.0;
  /// Called after each accepted step with the report, v = w - r and the ledger row.
  std::function<void(const StepReport&, const VField& v, const LedgerRow&)> on_step;
};

struct MarchResult {
  std::vector<StepReport> reports;
  BoundsLedger ledger;
  VField v;
  double t = 0.0;
  std::vector<std::string> log;
};

/// Runs steps until sum rho_l reaches T. Controls off is the plain
/// iteration with r = 0; controls on builds phi, solves r and tracks the
/// ledger every step.
MarchResult global_march(const VField& h, double nu, const MarchOptions& opt);

/// Viscous Burgers: the same march with the Leray term and controls off and
/// the maximum principle asserted.
MarchResult burgers_march(const VField& h, double nu, MarchOptions opt);

/// max(|div_h h|, (h^2 / 6) sum_i |d_i^3 h_i|): the truncation level of the
/// divergence stencil on the data.
double divergence_reference(const VField& h);

/// Cole-Hopf solution of u_t + u u_x = nu u_xx with u(0) = sin x on the circle.
double cole_hopf_sine(double nu, double t, double x);

/// Taylor-Green vortex of the 2D Navier-Stokes equations.
VField taylor_green_2d(const Grid& g, double nu, double t);

}  // namespace leray
