#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "leray/boundary.hpp"
#include "leray/cli_io.hpp"

namespace leray {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["dim"] = c.dim;
  j["points"] = c.points;
  j["extent"] = c.extent;
  j["topology"] = c.topology == Topology::torus ? "torus" : "free_space";
  j["mode"] = to_string(c.mode);
  j["schedule"] = c.schedule.mode == ScheduleMode::uniform_section4 ? "uniform" : "decreasing";
  j["schedule_C"] = c.schedule.C;
  j["rho"] = c.schedule.rho;
  j["nu"] = c.nu;
  j["T"] = c.T;
  j["initial"] = to_string(c.initial);
  j["amplitude"] = c.amplitude;
  j["backend"] = c.backend.kind == BackendKind::reference_imex ? "reference_imex" : "duhamel_parametrix";
  j["substeps"] = c.backend.substeps;
  j["advection"] = c.backend.advection == Advection::upwind3 ? "upwind3" : "upwind1";
  j["tol_rel"] = c.tol_rel;
  j["kmax"] = c.kmax;
  j["seed"] = c.seed;
  return j;
}

void write_json(const fs::path& p, const ordered_json& j) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IOError, "cannot write '" + p.string() + "'");
  out << j.dump(2) << "\n";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IOError, "cannot write '" + p.string() + "'");
  return out;
}

RunOutcome run_boundary_bench(const RunConfig& c, const fs::path& dir, ordered_json& summary) {
  RunOutcome o;
  o.output_dir = dir.string();
  const auto rep = robin_benchmark();
  auto csv = open_out(dir / "boundary.csv");
  csv << "x,u,reference,error\n";
  for (std::size_t i = 0; i < rep.x.size(); ++i)
    csv << format_double(rep.x[i]) << "," << format_double(rep.u[i]) << "," << format_double(rep.reference[i]) << ","
        << format_double(rep.u[i] - rep.reference[i]) << "\n";
  ordered_json inv;
  inv["robin_linf"] = {{"value", rep.linf}, {"threshold", 1e-3}, {"pass", rep.linf <= 1e-3}};
  inv["integral_residual"] = {{"value", rep.residual}, {"threshold", 1e-6}, {"pass", rep.residual <= 1e-6}};
  inv["series_ratio_past_1"] = {{"value", rep.max_ratio_past_1}, {"threshold", 0.9}, {"pass", rep.max_ratio_past_1 < 0.9}};
  inv["insulated_mass"] = {{"value", rep.mass_drift}, {"threshold", 1e-4}, {"pass", rep.mass_drift <= 1e-4}};
  bool ok = true;
  for (auto& [k, v] : inv.items()) ok = ok && v["pass"].get<bool>();
  summary["series_terms"] = rep.terms;
  summary["invariants"] = inv;
  summary["status"] = ok ? "ok" : "invariant_failed";
  o.oracle_error = rep.linf;
  o.exit_code = ok ? 0 : 1;
  if (!ok) {
    o.error_kind = "InvariantFailed";
    o.message = "boundary benchmark outside tolerance";
  }
  (void)c;
  return o;
}

}  // namespace

RunOutcome run(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = resolve_output_dir(c);
  fs::create_directories(dir);
  ordered_json summary;
  summary["config"] = config_json(c);
  summary["log"] = c.log;

  if (c.mode == RunMode::boundary_bench) {
    RunOutcome o = run_boundary_bench(c, dir, summary);
    summary["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(dir / "summary.json", summary);
    return o;
  }

  RunOutcome o;
  o.output_dir = dir.string();
  const VField h = initial_field(c);
  const Grid& g = h.grid();
  const bool ns = c.mode != RunMode::burgers;
  const bool tg_oracle = ns && c.initial == InitialPreset::taylor_green;
  const bool ch_oracle = !ns && c.initial == InitialPreset::cole_hopf_1d && std::abs(c.extent - 3.141592653589793) < 1e-12;
  const bool has_oracle = tg_oracle || ch_oracle;
  auto oracle_error = [&](const VField& v, double t) {
    if (tg_oracle) return sup(v - c.amplitude * taylor_green_2d(g, c.nu, t));
    double e = 0.0;
    if (c.amplitude == 1.0) {
      for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(v[0][i] - cole_hopf_sine(c.nu, t, g.point(i)[0])));
    } else {
      // Cole-Hopf for A sin x is the unit solution at viscosity nu / A on time A t.
      for (std::size_t i = 0; i < g.size(); ++i)
        e = std::max(e, std::abs(v[0][i] - c.amplitude * cole_hopf_sine(c.nu / c.amplitude, c.amplitude * t, g.point(i)[0])));
    }
    return e;
  };

  const double div_ref = g.dim >= 2 && h.ncomp() == g.dim ? divergence_reference(h) : 0.0;
  write_field_dump((dir / "field_initial.csv").string(), h, 0.0);

  auto steps_csv = open_out(dir / "steps.csv");
  auto ledger_csv = open_out(dir / "ledger.csv");
  steps_csv << steps_csv_header() << "\n";
  ledger_csv << ledger_csv_header() << "\n";

  std::vector<double> dumps = c.dump_times;
  std::sort(dumps.begin(), dumps.end());
  std::size_t next_dump = 0;
  ordered_json dump_list = ordered_json::array();

  struct Flags {
    bool contraction = true, sum_quarter = true, sum_c12 = true, ledger = true, max_principle = true,
         divergence = true, psi_gap = true, dominance = true;
    double worst_ratio = 0.0, worst_sum = 0.0, worst_div = 0.0, worst_psi = 0.0, worst_s_term = 0.0;
  } flags;
  double c12 = 0.0;
  VField last_v = h;
  double last_t = 0.0;

  MarchOptions opt;
  opt.schedule = c.schedule;
  opt.T = c.T;
  opt.controls = c.mode == RunMode::navier_stokes_controls_on;
  opt.leray = ns;
  opt.paper_faithful = c.paper_faithful;
  opt.modulation = c.modulation;
  opt.iteration.backend = c.backend;
  opt.iteration.kmax = c.kmax;
  opt.max_retries = c.max_retries;
  opt.max_steps = c.max_steps;
  if (!ns) {
    opt.max_principle = true;
    opt.max_principle_eps = 1e-6 + g.spacing() * g.spacing();
  }
  {
    // The tolerance is relative to the data's C_{1,2}.
    c12 = c12_constant(h);
    opt.iteration.tol = c.tol_rel * c12;
  }
  opt.on_step = [&](const StepReport& r, const VField& v, const LedgerRow& row) {
    const double err = has_oracle ? oracle_error(v, r.t) : 0.0;
    steps_csv << steps_csv_row(r, err, has_oracle) << "\n";
    ledger_csv << ledger_csv_row(row) << "\n";
    flags.contraction = flags.contraction && r.contraction_ok;
    flags.sum_quarter = flags.sum_quarter && r.sum_ok;
    flags.sum_c12 = flags.sum_c12 && r.sum_delta <= 0.25 * c12;
    flags.ledger = flags.ledger && r.ledger_ok;
    flags.max_principle = flags.max_principle && r.max_principle_ok;
    flags.worst_ratio = std::max(flags.worst_ratio, r.max_ratio);
    flags.worst_sum = std::max(flags.worst_sum, r.sum_delta);
    flags.worst_div = std::max(flags.worst_div, r.div_v);
    flags.worst_psi = std::max(flags.worst_psi, r.psi_gap);
    if (div_ref > 0.0 && r.div_v > 10.0 * div_ref) flags.divergence = false;
    if (r.psi_gap > 0.25) flags.psi_gap = false;
    if (opt.controls) {
      flags.dominance = flags.dominance && r.dominance.passes();
      flags.worst_s_term = std::max(flags.worst_s_term, r.dominance.s_term);
    }
    if (has_oracle) o.oracle_error = err;
    while (next_dump < dumps.size() && r.t >= dumps[next_dump] - 1e-12) {
      char name[32];
      std::snprintf(name, sizeof name, "field_%03zu.csv", next_dump);
      write_field_dump((dir / name).string(), v, r.t);
      ordered_json d{{"t", r.t}, {"field", name}};
      if (c.svg) {
        std::snprintf(name, sizeof name, "slice_%03zu.svg", next_dump);
        write_svg_slice((dir / name).string(), v, "t = " + format_double(r.t));
        d["svg"] = name;
      }
      if (has_oracle) d["oracle_error"] = err;
      dump_list.push_back(d);
      ++next_dump;
    }
    last_v = v;
    last_t = r.t;
    ++o.steps;
  };

  MarchResult res;
  try {
    res = global_march(h, c.nu, opt);
    summary["status"] = "ok";
  } catch (const Error& e) {
    o.exit_code = 1;
    o.error_kind = std::string(to_string(e.kind()));
    o.message = e.what();
    if (o.message.rfind(o.error_kind + ": ", 0) == 0) o.message.erase(0, o.error_kind.size() + 2);
    summary["status"] = "error";
    summary["error"] = {{"kind", o.error_kind}, {"message", o.message}, {"last_accepted_t", last_t}};
    write_field_dump((dir / "field_last_accepted.csv").string(), last_v, last_t);
  }
  steps_csv.flush();
  ledger_csv.flush();
  o.t = last_t;

  if (o.exit_code == 0) {
    write_field_dump((dir / "field_final.csv").string(), res.v, res.t);
    if (c.svg) write_svg_slice((dir / "slice_final.svg").string(), res.v, "t = " + format_double(res.t));
    summary["ledger"] = {{"c12", res.ledger.c12},       {"c_r", res.ledger.c_r},     {"c_star", res.ledger.c_star},
                         {"c_gamma", res.ledger.c_gamma}, {"cap_1", res.ledger.cap(1)}, {"substep_rho_1", res.ledger.substep_rho(1)}};
    summary["march_log"] = res.log;
  }
  summary["steps"] = o.steps;
  summary["t_final"] = last_t;
  if (has_oracle) summary["oracle_error_final"] = o.oracle_error;
  summary["dumps"] = dump_list;

  ordered_json inv;
  inv["contraction"] = {{"pass", flags.contraction}, {"worst_ratio", flags.worst_ratio}, {"threshold", 0.27}};
  inv["sum_bound_quarter"] = {{"pass", flags.sum_quarter}, {"worst", flags.worst_sum}, {"threshold", 0.25}};
  inv["sum_bound_c12"] = {{"pass", flags.sum_c12}, {"worst", flags.worst_sum}, {"threshold", 0.25 * c12}};
  inv["ledger"] = {{"pass", flags.ledger}};
  if (!ns) inv["max_principle"] = {{"pass", flags.max_principle}};
  if (div_ref > 0.0)
    inv["divergence"] = {{"pass", flags.divergence}, {"worst", flags.worst_div}, {"reference", div_ref}, {"factor", 10}};
  if (opt.controls)
    inv["dominance"] = {{"pass", flags.dominance}, {"worst_s_term", flags.worst_s_term}, {"s_threshold", 0.5}};
  if (opt.controls) inv["psi_gap"] = {{"pass", flags.psi_gap}, {"worst", flags.worst_psi}, {"threshold", 0.25}};
  summary["invariants"] = inv;
  summary["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(dir / "summary.json", summary);
  return o;
}

}  // namespace leray
