#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "leray/cli_io.hpp"

namespace leray {

std::string format_double(double x) {
  if (x == 0.0) return "0";
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  (void)ec;
  return std::string(buf.data(), p);
}

void write_field_dump(const std::string& path, const VField& v, double t) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write '" + path + "'");
  const Grid& g = v.grid();
  out << "# leray-field dim=" << g.dim << " points=" << g.points << " extent=" << format_double(g.extent)
      << " topology=" << (g.topology == Topology::torus ? "torus" : "free_space") << " ncomp=" << v.ncomp()
      << " t=" << format_double(t) << "\n";
  for (int a = 0; a < g.dim; ++a) out << (a ? "," : "") << "x" << a;
  for (int c = 0; c < v.ncomp(); ++c) out << ",v" << c;
  out << "\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    for (int a = 0; a < g.dim; ++a) out << (a ? "," : "") << format_double(p[a]);
    for (int c = 0; c < v.ncomp(); ++c) out << "," << format_double(v[c][i]);
    out << "\n";
  }
}

std::pair<VField, double> read_field_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open field dump '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;
  if (tok != "#") throw Error(ErrorKind::ParseError, path + ":1: missing '# leray-field' header");
  hs >> tok;
  if (tok != "leray-field") throw Error(ErrorKind::ParseError, path + ":1: missing '# leray-field' header");
  int dim = 0, points = 0, ncomp = 0;
  double extent = 0.0, t = 0.0;
  Topology top = Topology::torus;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (k == "dim") dim = std::stoi(val);
    else if (k == "points") points = std::stoi(val);
    else if (k == "extent") extent = std::stod(val);
    else if (k == "ncomp") ncomp = std::stoi(val);
    else if (k == "t") t = std::stod(val);
    else if (k == "topology") top = val == "torus" ? Topology::torus : Topology::free_space;
  }
  if (ncomp < 1) throw Error(ErrorKind::ParseError, path + ":1: ncomp missing");
  const Grid g = make_grid(dim, extent, points, top);
  VField v(g, ncomp);
  std::string line;
  std::getline(in, line);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::getline(in, line))
      throw Error(ErrorKind::ParseError, path + ": expected " + std::to_string(g.size()) + " rows");
    std::istringstream ls(line);
    std::string cell;
    for (int col = 0; std::getline(ls, cell, ','); ++col)
      if (col >= dim && col < dim + ncomp) v[col - dim][i] = std::stod(cell);
  }
  return {v, t};
}

namespace {

std::string colour(double s) {
  // Piecewise-linear dark blue -> teal -> yellow.
  static const std::array<std::array<double, 3>, 3> stops{{{68, 1, 84}, {33, 145, 140}, {253, 231, 37}}};
  s = std::clamp(s, 0.0, 1.0) * 2.0;
  const int i = std::min(static_cast<int>(s), 1);
  const double f = s - i;
  std::ostringstream o;
  o << "rgb(";
  for (int c = 0; c < 3; ++c) o << (c ? "," : "") << static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  o << ")";
  return o.str();
}

}  // namespace

void write_svg_slice(const std::string& path, const VField& v, const std::string& title) {
  const Grid& g = v.grid();
  const int n = g.points;
  const int stride = std::max(1, (n + 63) / 64);
  const int cells = (n + stride - 1) / stride;
  const int rows = g.dim == 1 ? 1 : cells;
  const double px = 256.0 / cells;
  const double height = g.dim == 1 ? 24.0 : 256.0;

  Field speed(g), div(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int c = 0; c < v.ncomp(); ++c) s += v[c][i] * v[c][i];
    speed[i] = std::sqrt(s);
  }
  if (v.ncomp() == g.dim) div = divergence(v);

  auto at = [&](const Field& f, int ix, int iy) {
    std::array<int, 3> ijk{ix, iy, n / 2};
    if (g.dim == 1) ijk = {ix, 0, 0};
    return f[g.ravel(ijk)];
  };

  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"" << format_double(height + 56.0)
      << "\" font-family=\"monospace\" font-size=\"11\">\n";
  out << "<text x=\"8\" y=\"14\">" << title << "</text>\n";
  const std::array<std::pair<const Field*, const char*>, 2> panels{{{&speed, "|v|"}, {&div, "div v"}}};
  for (int p = 0; p < 2; ++p) {
    const Field& f = *panels[p].first;
    double lo = f.values().minCoeff(), hi = f.values().maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    const double x0 = 8.0 + p * 280.0, y0 = 22.0;
    out << "<g>\n";
    for (int iy = 0; iy < rows; ++iy)
      for (int ix = 0; ix < cells; ++ix) {
        const double val = at(f, ix * stride, iy * stride);
        // Row 0 at the bottom, x to the right.
        out << "<rect x=\"" << format_double(x0 + ix * px) << "\" y=\""
            << format_double(y0 + (g.dim == 1 ? 0.0 : (rows - 1 - iy) * px)) << "\" width=\"" << format_double(px)
            << "\" height=\"" << format_double(g.dim == 1 ? height : px) << "\" fill=\"" << colour((val - lo) / span)
            << "\"/>\n";
      }
    out << "</g>\n";
    out << "<text x=\"" << format_double(x0) << "\" y=\"" << format_double(y0 + height + 14.0) << "\">"
        << panels[p].second << " min " << format_double(lo) << " max " << format_double(hi) << "</text>\n";
  }
  out << "</svg>\n";
}

std::string steps_csv_header() {
  return "l,t,rho,iterations,retries,final_ratio,max_ratio,sum_delta,sup_vr,h2_vr,sup_r,h2_r,sup_v,h2_v,div_v,"
         "integral_magnitude,psi_gap,s01,dom_points,dom_plus,dom_minus,s_term,oracle_error";
}

std::string steps_csv_row(const StepReport& r, double oracle_error, bool has_oracle) {
  std::ostringstream o;
  o << r.l << "," << format_double(r.t) << "," << format_double(r.rho) << "," << r.iterations << "," << r.retries;
  for (double x : {r.final_ratio, r.max_ratio, r.sum_delta, r.sup_vr, r.h2_vr, r.sup_r, r.h2_r, r.sup_v, r.h2_v,
                   r.div_v, r.integral_magnitude, r.psi_gap, r.s01})
    o << "," << format_double(x);
  o << "," << r.dominance.points;
  for (double x : {r.dominance.worst_plus, r.dominance.worst_minus, r.dominance.s_term}) o << "," << format_double(x);
  o << ",";
  if (has_oracle) o << format_double(oracle_error);
  return o.str();
}

std::string ledger_csv_header() { return "l,t,rho,c12_step,h2_budget,h2_vr,h2_r,sup_vr,sup_v,sup_r,breach"; }

std::string ledger_csv_row(const LedgerRow& r) {
  std::ostringstream o;
  o << r.l;
  for (double x : {r.t, r.rho, r.c12_step, r.h2_budget, r.h2_vr, r.h2_r, r.sup_vr, r.sup_v, r.sup_r})
    o << "," << format_double(x);
  std::string b;
  if (r.breach_sup_vr) b += "sup_vr;";
  if (r.breach_sup_v) b += "sup_v;";
  if (r.breach_sup_r) b += "sup_r;";
  if (r.breach_h2) b += "h2;";
  if (!b.empty()) b.pop_back();
  o << "," << (b.empty() ? "none" : b);
  return o.str();
}

}  // namespace leray
