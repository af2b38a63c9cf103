#include <cstdlib>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "json.hpp"
#include "leray/boundary.hpp"
#include "leray/cli_io.hpp"
#include "leray/parametrix.hpp"

using namespace leray;
using nlohmann::ordered_json;

namespace {

Point to_point(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::ValidationError,
                std::string(what) + " needs " + std::to_string(dim) + " coordinates, got " + std::to_string(v.size()));
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) p[i] = v[i];
  return p;
}

ordered_json point_json(const Point& p, int dim) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leray-form Navier-Stokes scheme: runs, validation and kernel probes"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run a configuration file");
  run_cmd->add_option("config", config_path, "key = value configuration file")->required();

  ValidateOptions vopt;
  auto* val_cmd = app.add_subcommand("validate", "Run the oracle and property suites");
  val_cmd->add_option("--filter", vopt.filter, "Only this suite")
      ->check(CLI::IsMember(validate_suites()));
  val_cmd->add_flag("--inject-fault", vopt.inject_fault, "Perturb one convolution engine");
  val_cmd->add_option("--seed", vopt.seed, "Seed for sampled test points");

  auto* kern = app.add_subcommand("kernel", "Evaluate kernels and print JSON");
  kern->require_subcommand(1);
  int dim = 2;
  double D = 1.0, t = 1.0;
  int M = 2, order = 2;
  std::vector<double> x, y, b;
  auto common = [&](CLI::App* c, bool time, bool drift) {
    c->add_option("--dim", dim, "Space dimension")->check(CLI::Range(1, 3));
    c->add_option("--x", x, "Evaluation point")->required()->expected(1, 3);
    if (time) {
      c->add_option("--y", y, "Source point")->expected(1, 3);
      c->add_option("--D", D, "Diffusion")->check(CLI::PositiveNumber);
      c->add_option("--t", t, "Elapsed time")->check(CLI::PositiveNumber);
    }
    if (drift) c->add_option("--b", b, "Constant drift")->expected(1, 3);
  };
  auto* k_poisson = kern->add_subcommand("poisson", "Poisson kernel and gradient");
  common(k_poisson, false, false);
  auto* k_heat = kern->add_subcommand("heat", "Gaussian heat kernel");
  common(k_heat, true, false);
  auto* k_levy = kern->add_subcommand("levy", "Levy series for a constant drift, with the closed form");
  common(k_levy, true, true);
  k_levy->add_option("--M", M, "Series depth")->check(CLI::Range(0, 6));
  auto* k_param = kern->add_subcommand("param", "d_k expansion for a constant drift, with the closed form");
  common(k_param, true, true);
  k_param->add_option("--order", order, "Expansion order")->check(CLI::Range(0, 4));
  auto* k_self = kern->add_subcommand("self-test", "Compare both convolution engines");
  int points = 32;
  k_self->add_option("--dim", dim, "Space dimension")->check(CLI::Range(1, 3));
  k_self->add_option("--points", points, "Grid points per axis")->check(CLI::Range(8, 64));

  auto* bench = app.add_subcommand("boundary-bench", "Robin heat benchmark on an interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: UsageError: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*run_cmd) {
      const RunConfig c = parse_config(config_path);
      const RunOutcome o = run(c);
      ordered_json j{{"exit_code", o.exit_code}, {"output_dir", o.output_dir}, {"steps", o.steps}, {"t", o.t}};
      if (o.oracle_error >= 0.0) j["oracle_error"] = o.oracle_error;
      std::cout << j.dump() << "\n";
      if (o.exit_code != 0) std::cerr << "error: " << o.error_kind << ": " << o.message << "\n";
      return o.exit_code;
    }
    if (*val_cmd) {
      const auto results = validate(vopt, std::cout);
      for (const auto& r : results)
        if (!r.pass) {
          std::cerr << "error: ValidationFailed: " << r.suite << "/" << r.name
                    << (r.error.empty() ? "" : ": " + r.error) << "\n";
          return 1;
        }
      return 0;
    }
    if (*kern) {
      ordered_json j;
      const Point origin{0.0, 0.0, 0.0};
      const Point px = x.empty() ? origin : to_point(x, dim, "--x");
      const Point py = y.empty() ? origin : to_point(y, dim, "--y");
      const Point pb = b.empty() ? origin : to_point(b, dim, "--b");
      if (*k_poisson) {
        j = {{"kernel", "poisson"}, {"dim", dim}, {"x", point_json(px, dim)}, {"value", poisson_kernel(dim, px)},
             {"grad", point_json(poisson_kernel_grad(dim, px), dim)}, {"omega_n", omega_n(dim)}};
      } else if (*k_heat) {
        j = {{"kernel", "heat"}, {"dim", dim}, {"D", D}, {"t", t}, {"value", heat_kernel({dim, D, t}, px, py)}};
      } else if (*k_levy) {
        LevySeries s{constant_drift(dim, pb), D, M, 8, 6};
        const auto r = levy_gamma(s, t, px, 0.0, py);
        j = {{"kernel", "levy"}, {"dim", dim}, {"M", M}, {"value", r.value}, {"terms", r.terms},
             {"closed_form", constant_drift_gamma(dim, D, pb, t, px, 0.0, py)},
             {"truncation_warning", r.truncation_warning}};
      } else if (*k_param) {
        DkExpansion e{constant_drift(dim, pb), D, order};
        const auto r = param_fundamental(e, t, px, py);
        j = {{"kernel", "param"}, {"dim", dim}, {"order", order}, {"value", r.value},
             {"d", dk_coefficients(e, px, py)}, {"closed_form", constant_drift_gamma(dim, D, pb, t, px, 0.0, py)},
             {"validity_warning", r.validity_warning}};
      } else {
        const Grid g = make_grid(dim, std::numbers::pi, points, Topology::torus);
        const Field f = sample(g, [](const Point& p) { return std::sin(p[0]) * std::cos(p[1]) + std::cos(p[2]); });
        GaussianKernelSpec spec{dim, 0.1, 0.3};
        auto k = sample_kernel(g, [&](const Point& p) { return heat_kernel(spec, p, origin); });
        j = {{"kernel", "self-test"}, {"dim", dim}, {"points", points}, {"discrepancy", engine_self_test(f, k, 1e-10)}};
      }
      std::cout << j.dump() << "\n";
      return 0;
    }
    if (*bench) {
      RunConfig c;
      c.mode = RunMode::boundary_bench;
      c.output_dir = "out/boundary_bench";
      const RunOutcome o = run(c);
      ordered_json j{{"exit_code", o.exit_code}, {"output_dir", o.output_dir}, {"linf", o.oracle_error}};
      std::cout << j.dump() << "\n";
      if (o.exit_code != 0) std::cerr << "error: " << o.error_kind << ": " << o.message << "\n";
      return o.exit_code;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto p = msg.find('\n'); p != std::string::npos; p = msg.find('\n', p)) msg.replace(p, 1, "; ");
    std::cerr << "error: " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
