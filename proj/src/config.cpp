#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "leray/cli_io.hpp"

namespace leray {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> kv, std::string origin) : kv_(std::move(kv)), origin_(std::move(origin)) {}

  bool has(const std::string& k) const { return kv_.count(k) > 0; }

  template <class T>
  void number(const std::string& k, T& out) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return;
    const std::string& v = it->second.value;
    T x{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) {
      bad(it->second.line, k + ": expected a number, got '" + v + "'");
      return;
    }
    out = x;
  }

  void text(const std::string& k, std::string& out) {
    auto it = kv_.find(k);
    if (it != kv_.end()) out = it->second.value;
  }

  void boolean(const std::string& k, bool& out) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return;
    if (it->second.value == "true") out = true;
    else if (it->second.value == "false") out = false;
    else bad(it->second.line, k + ": expected true or false");
  }

  template <class E>
  void choice(const std::string& k, E& out, const std::vector<std::pair<std::string, E>>& options) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return;
    for (const auto& [name, e] : options)
      if (name == it->second.value) {
        out = e;
        return;
      }
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    bad(it->second.line, k + ": '" + it->second.value + "' is not one of " + names);
  }

  void list(const std::string& k, std::vector<double>& out) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return;
    std::string v = it->second.value;
    if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::stringstream ss(v);
    std::string item;
    out.clear();
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      double x = 0.0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (ec != std::errc() || p != item.data() + item.size()) {
        bad(it->second.line, k + ": bad list entry '" + item + "'");
        return;
      }
      out.push_back(x);
    }
  }

  int line(const std::string& k) const {
    auto it = kv_.find(k);
    return it == kv_.end() ? 0 : it->second.line;
  }

  void bad(int line, const std::string& msg) { errors_.push_back(origin_ + ":" + std::to_string(line) + ": " + msg); }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::map<std::string, Entry> kv_;
  std::string origin_;
  std::vector<std::string> errors_;
};

const std::vector<std::string> kKeys = {
    "dim",       "points",       "extent",       "topology",   "mode",        "schedule",       "schedule_C",
    "rho",       "nu",           "T",            "initial",    "amplitude",   "bump_width",     "initial_file",
    "backend",   "substeps",     "advection",    "param_order", "tol_rel",    "kmax",           "max_retries",
    "max_steps", "modulation",   "paper_faithful", "dump_times", "svg",       "output_dir",     "seed"};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "\n") + x;
  return s;
}

}  // namespace

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::navier_stokes_controls_on: return "navier_stokes_controls_on";
    case RunMode::navier_stokes_controls_off: return "navier_stokes_controls_off";
    case RunMode::burgers: return "burgers";
    case RunMode::boundary_bench: return "boundary_bench";
  }
  return "unknown";
}

std::string to_string(InitialPreset p) {
  switch (p) {
    case InitialPreset::taylor_green: return "taylor_green";
    case InitialPreset::gaussian_bump: return "gaussian_bump";
    case InitialPreset::cole_hopf_1d: return "cole_hopf_1d";
    case InitialPreset::file: return "file";
  }
  return "unknown";
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> kv;
  std::vector<std::string> parse_errors;
  std::istringstream in(text);
  std::string raw;
  for (int ln = 1; std::getline(in, raw); ++ln) {
    std::string s = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) {
        s.resize(i);
        break;
      }
    }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      parse_errors.push_back(origin + ":" + std::to_string(ln) + ": expected key = value");
      continue;
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = unquote(trim(s.substr(eq + 1)));
    if (key.empty()) {
      parse_errors.push_back(origin + ":" + std::to_string(ln) + ": empty key");
    } else if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      parse_errors.push_back(origin + ":" + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (kv.count(key)) {
      parse_errors.push_back(origin + ":" + std::to_string(ln) + ": duplicate key '" + key + "' (first on line " +
                             std::to_string(kv[key].line) + ")");
    } else {
      kv[key] = {value, ln};
    }
  }
  if (!parse_errors.empty()) throw Error(ErrorKind::ParseError, join(parse_errors));

  RunConfig c;
  Reader r(kv, origin);
  r.number("dim", c.dim);
  r.number("points", c.points);
  r.number("extent", c.extent);
  r.choice("topology", c.topology, {{"torus", Topology::torus}, {"free_space", Topology::free_space}});
  r.choice("mode", c.mode,
           {{"navier_stokes_controls_off", RunMode::navier_stokes_controls_off},
            {"navier_stokes_controls_on", RunMode::navier_stokes_controls_on},
            {"burgers", RunMode::burgers},
            {"boundary_bench", RunMode::boundary_bench}});
  r.choice("schedule", c.schedule.mode,
           {{"uniform", ScheduleMode::uniform_section4}, {"decreasing", ScheduleMode::decreasing_paper}});
  r.number("schedule_C", c.schedule.C);
  r.number("rho", c.schedule.rho);
  if (r.has("nu")) r.number("nu", c.nu);
  else c.log.push_back("nu not set; using 0.1");
  r.number("T", c.T);
  r.choice("initial", c.initial,
           {{"taylor_green", InitialPreset::taylor_green},
            {"gaussian_bump", InitialPreset::gaussian_bump},
            {"cole_hopf_1d", InitialPreset::cole_hopf_1d},
            {"file", InitialPreset::file}});
  r.number("amplitude", c.amplitude);
  r.number("bump_width", c.bump_width);
  r.text("initial_file", c.initial_file);
  r.choice("backend", c.backend.kind,
           {{"reference_imex", BackendKind::reference_imex}, {"duhamel_parametrix", BackendKind::duhamel_parametrix}});
  r.number("substeps", c.backend.substeps);
  r.choice("advection", c.backend.advection, {{"upwind3", Advection::upwind3}, {"upwind1", Advection::upwind1}});
  r.number("param_order", c.backend.param_order);
  r.number("tol_rel", c.tol_rel);
  r.number("kmax", c.kmax);
  r.number("max_retries", c.max_retries);
  r.number("max_steps", c.max_steps);
  r.choice("modulation", c.modulation, {{"constant", PhiModulation::constant}, {"sin2", PhiModulation::sin2}});
  r.boolean("paper_faithful", c.paper_faithful);
  r.list("dump_times", c.dump_times);
  r.boolean("svg", c.svg);
  r.text("output_dir", c.output_dir);
  r.number("seed", c.seed);

  std::vector<std::string> errs = r.errors();
  auto bad = [&](const std::string& key, const std::string& msg) {
    errs.push_back(origin + ":" + std::to_string(r.line(key)) + ": " + key + ": " + msg);
  };
  if (c.dim < 1 || c.dim > 3) bad("dim", "must be 1, 2 or 3");
  if (c.points < 8 || c.points % 2) bad("points", "must be even and >= 8");
  if (!(c.extent > 0.0)) bad("extent", "must be positive");
  if (!(c.nu > 0.0)) bad("nu", "must be positive");
  if (!(c.T > 0.0)) bad("T", "must be positive");
  if (!(c.schedule.C > 0.0)) bad("schedule_C", "must be positive");
  if (c.schedule.rho < 0.0) bad("rho", "must be >= 0 (0 picks the cap)");
  if (!(c.tol_rel > 0.0)) bad("tol_rel", "must be positive");
  if (c.kmax < 1) bad("kmax", "must be >= 1");
  if (c.max_retries < 0) bad("max_retries", "must be >= 0");
  if (c.max_steps < 1) bad("max_steps", "must be >= 1");
  if (c.backend.substeps < 1) bad("substeps", "must be >= 1");
  if (c.backend.param_order < 0 || c.backend.param_order > 4) bad("param_order", "must be in 0..4");
  if (!(c.amplitude == c.amplitude)) bad("amplitude", "must be finite");
  if (!(c.bump_width > 0.0)) bad("bump_width", "must be positive");
  for (double t : c.dump_times)
    if (!(t > 0.0 && t <= c.T)) bad("dump_times", "entries must lie in (0, T]");
  const bool ns = c.mode == RunMode::navier_stokes_controls_off || c.mode == RunMode::navier_stokes_controls_on;
  if (ns && c.dim == 1) bad("mode", "Navier-Stokes modes need dim 2 or 3");
  if (c.mode != RunMode::boundary_bench) {
    if (c.initial == InitialPreset::taylor_green && (c.dim != 2 || c.topology != Topology::torus))
      bad("initial", "taylor_green is a 2D torus preset");
    if (c.initial == InitialPreset::cole_hopf_1d && (c.dim != 1 || c.topology != Topology::torus))
      bad("initial", "cole_hopf_1d is a 1D torus preset");
    if (c.initial == InitialPreset::file && c.initial_file.empty()) bad("initial_file", "required for initial = file");
  }
  if (!errs.empty()) throw Error(ErrorKind::ValidationError, join(errs));
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

VField initial_field(const RunConfig& c) {
  const Grid g = make_grid(c.dim, c.extent, c.points, c.topology);
  const double A = c.amplitude, w2 = c.bump_width * c.bump_width;
  switch (c.initial) {
    case InitialPreset::taylor_green: return A * taylor_green_2d(g, c.nu, 0.0);
    case InitialPreset::cole_hopf_1d:
      return sample(g, 1, [A](int, const Point& x) { return A * std::sin(x[0]); });
    case InitialPreset::gaussian_bump:
      if (c.dim == 1) return sample(g, 1, [=](int, const Point& x) { return A * std::exp(-x[0] * x[0] / w2); });
      // A swirl (-y, x, 0) exp(-|x|^2 / w^2), divergence free.
      return sample(g, c.dim, [=](int k, const Point& x) {
        const double e = A * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w2);
        return k == 0 ? -x[1] * e : k == 1 ? x[0] * e : 0.0;
      });
    case InitialPreset::file: {
      auto [v, t] = read_field_dump(c.initial_file);
      (void)t;
      const Grid& fg = v.grid();
      if (fg.dim != g.dim || fg.points != g.points || fg.topology != g.topology || std::abs(fg.extent - g.extent) > 1e-12)
        throw Error(ErrorKind::ValidationError, "initial_file grid does not match the configured grid");
      return v;
    }
  }
  return VField(g);
}

std::string resolve_output_dir(const RunConfig& c) {
  const char* env = std::getenv("LERAY_OUTPUT_DIR");
  return env && *env ? std::string(env) : c.output_dir;
}

}  // namespace leray
