#pragma once

#include <string>
#include <vector>

#include "leray/grid_fields.hpp"
#include "leray/kernels.hpp"
#include "leray/linparab.hpp"

namespace leray {

using IndexSet = std::vector<std::size_t>;
using Cell = std::array<int, 3>;

/// Tensor partition of unity by mollifier bumps psi = h/H,
/// h(y) = exp(-1/(1 - y^2)), on cubes of side mu. On the torus mu is
/// shrunk to divide the period so the partition wraps.
struct BumpPartition {
  Grid grid;
  double mu = 1.0;
  int cells_per_axis = 0;  // torus only
  std::vector<Cell> cells_a;
  std::vector<Cell> cells_b;

  double sum(const Point& x) const;
  /// (sum over A cells, sum over B cells) of the weights at x.
  std::pair<double, double> weights(const Point& x) const;
  double f(const Point& x) const {
    auto [a, b] = weights(x);
    return a - b;
  }
};

struct PartitionResult {
  BumpPartition partition;
  Field f;
  double delta = 0.0;
  /// |f|_{0,2} on the grid.
  double norm02 = 0.0;
};

/// Grid distance between two index sets; minimal image on the torus.
/// Infinite when either set is empty.
double set_distance(const Grid& g, const IndexSet& a, const IndexSet& b);

/// f = sum_{P_A} phi_p - sum_{P_B} phi_p with mu = dist(A, B) / (2 sqrt(n)),
/// or mu = 2h when a set is empty. Throws EmptyDistance if the sets touch.
PartitionResult build_partition(const IndexSet& a, const IndexSet& b, const Grid& g);

struct ThresholdSets {
  double level = 1.0;
  std::vector<IndexSet> v_plus, v_minus, r_plus, r_minus;
  std::vector<double> delta_v, delta_r;
  std::vector<int> erosions_v, erosions_r;
  std::vector<std::string> log;
};

/// Bands [C/2, C] and [-C, -C/2] per component. The r sets skip points in
/// the v sets of the same component. Sets closer than 2h are eroded one
/// layer at a time.
ThresholdSets build_threshold_sets(const VField& v_prev, const VField& r_prev, double C);

enum class PhiModulation { constant, sin2 };

struct ConsumptionField {
  VField phi_v;
  VField phi_r;
  PhiModulation modulation = PhiModulation::constant;
  double norm02 = 0.0;

  VField total() const { return phi_v + phi_r; }
  /// phi at fraction s in [0, 1] of the step.
  VField at(double s) const;
};

ConsumptionField build_phi(const VField& v_prev, const VField& r_prev, double C, const ThresholdSets& sets,
                           PhiModulation mod = PhiModulation::constant);
ConsumptionField build_phi(const VField& v_prev, const VField& r_prev, double C,
                           PhiModulation mod = PhiModulation::constant);

/// B(a, b)_i = int d_i K(x - y) sum_{j,k} a_{k,j} b_{j,k}(y) dy.
inline VField bilinear_leray(LerayOperator& op, const VField& a, const VField& b) { return op.rhs_bilinear(a, b); }

/// L(r; w) = -rho nu Lap r - rho r.grad r + rho r.grad w + rho w.grad r - 2 rho B(r, w) + rho Leray(r).
VField control_operator(LerayOperator& op, const VField& r, const VField& w, double rho, double nu);

/// S = -rho Leray(r_prev) - rho r_prev.grad v_prev - rho v_prev.grad r_prev
///     + 2 rho B(r_prev, v_prev) - rho Leray(v_prev).
VField r_source(LerayOperator& op, const VField& v_prev, const VField& r_prev, double rho);

/// |v|_{0,1}: sup plus first-derivative sups, summed over components.
double norm01(const VField& v);

/// Constant of the initial data:
/// 2 + 2|h|_{1,2} + int sum |d h|^2 + int (sum |d^2 h|)(sum |d h|).
double c12_constant(const VField& h);

struct LedgerRow {
  int l = 0;
  double rho = 0.0;
  double t = 0.0;
  double c12_step = 0.0;
  double h2_budget = 0.0;
  double h2_vr = 0.0;
  double h2_r = 0.0;
  double sup_vr = 0.0;
  double sup_v = 0.0;
  double sup_r = 0.0;
  bool breach_sup_vr = false;
  bool breach_sup_v = false;
  bool breach_sup_r = false;
  bool breach_h2 = false;

  bool any_breach() const { return breach_sup_vr || breach_sup_v || breach_sup_r || breach_h2; }
};

struct BoundsLedger {
  int dim = 2;
  double nu = 0.1;
  double c12 = 2.0;
  double c_r = 2.0;
  double c_star = 1.0;
  double c_gamma = 1.0;
  double c_k = 1.0;
  std::vector<LedgerRow> rows;

  double h2_budget(int l) const { return c_star * c_r * (1.0 + l); }
  /// 1 / (C* ((C + C_r) + l (C + C_r)) 4 C_Gamma^2) with C = C_{1,2}.
  double cap(int l) const;
  /// The smaller step under which |S|_{0,1} <= 1/4 is guaranteed.
  double substep_rho(int l) const;
};

/// C_r = C_{1,2} from h; C_Gamma from the fundamental-solution estimate at
/// the capped step, iterated to a fixed point.
BoundsLedger make_ledger(const VField& h, double nu);

/// Smallest power of two c with h2 <= c * C_{1,2} * (1 + l); sets C*_n and C_K.
void calibrate_c_star(BoundsLedger& ledger, double h2, int l = 1);

double h2_norm(const VField& v);

/// Solves r_tau - rho nu Lap r - rho r_prev.grad r = S + phi on one unit of
/// tau from r_prev. Checks sup|r| <= C_r and H^2(r) <= C* C_r (1 + l) at every
/// substep; throws LedgerBreach otherwise.
Trajectory solve_r(ImexSolver& solver, LerayOperator& op, const VField& v_prev, const VField& r_prev,
                   const ConsumptionField& phi, double rho, double nu, int l, const BoundsLedger& ledger,
                   const Backend& backend = {});

struct DominanceReport {
  /// max over D+ points of (1/dtau) int int phi Gamma_r; should be <= -3/4.
  double worst_plus = -1.0;
  /// min over D- points; should be >= 3/4.
  double worst_minus = 1.0;
  /// max over all points of (1/dtau) |int int S Gamma_r|; should be <= 1/2.
  double s_term = 0.0;
  std::size_t points = 0;
  bool passes() const { return worst_plus <= -0.75 && worst_minus >= 0.75 && s_term <= 0.5; }
};

/// Quadrature of int_0^dtau int phi(y) Gamma_r(s, x; y) dy ds with Gamma_r the
/// Gaussian of diffusion rho nu shifted by the frozen drift rho r_prev(x);
/// cell-averaged in space, Gauss-Legendre in time.
DominanceReport consumption_dominance(const ConsumptionField& phi, const ThresholdSets& sets, const VField& S,
                                      const VField& r_prev, double rho, double nu, double dtau = 1.0);

}  // namespace leray
