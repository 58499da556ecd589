// cc-critical: simulation CLI for the directed network model at the quantum
// Hall plateau transition. Subcommands cover spectra, squared-Green
// correlator scans, two-terminal conductance, multifractal moments, current
// circulation, truncated-Fock identities, geometry dumps, and SVG plots.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cc/cochain.hpp"
#include "cc/ensemble.hpp"
#include "cc/evolution.hpp"
#include "cc/fock.hpp"
#include "cc/greens.hpp"
#include "cc/lattice.hpp"
#include "cc/observables.hpp"
#include "cc/rng.hpp"
#include "cc/spectral.hpp"

namespace {

constexpr const char* kVersion = "cc-critical 0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

using nlohmann::json;
using namespace cc;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_complex(Complex v) {
  return fmt(v.real()) + "," + fmt(v.imag());
}

struct OutputWriter {
  std::string prefix;
  json manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  OutputWriter(std::string out_prefix, std::string command,
               const json& config)
      : prefix(std::move(out_prefix)) {
    manifest["command"] = std::move(command);
    manifest["config"] = config;
    manifest["version"] = kVersion;
    manifest["manifest_schema"] = 1;
  }

  void write_csv(const std::string& suffix, const std::string& header,
                 const std::vector<std::string>& rows) const {
    std::ofstream out(prefix + suffix, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + prefix + suffix);
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
  }

  void finish() {
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    manifest["timestamp"] = static_cast<long long>(std::time(nullptr));
    std::ofstream out(prefix + "_manifest.json", std::ios::trunc);
    out << manifest.dump(2) << "\n";
  }
};

std::vector<LinkId> parse_contacts(const lattice::NetworkGeometry& geom,
                                   const std::string& spec) {
  // "x,y,dir;..." with dir in {l,r,u,d}: the incident link on that side.
  std::vector<LinkId> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    int x, y;
    char dir;
    if (std::sscanf(item.c_str(), "%d,%d,%c", &x, &y, &dir) != 3)
      throw ParameterError("bad contact spec: " + item);
    const NodeId n = geom.node_at(x, y);
    if (n == kNoNode) throw ParameterError("contact node out of range");
    const auto& node = geom.node(n);
    LinkId l = kNoLink;
    switch (dir) {
      case 'l': l = node.west(); break;
      case 'r': l = node.east(); break;
      case 'u': l = node.north(); break;
      case 'd': l = node.south(); break;
      default: throw ParameterError("contact direction must be l/r/u/d");
    }
    if (l == kNoLink) throw ParameterError("no link on that side");
    out.push_back(l);
  }
  if (out.empty()) throw ParameterError("no contacts parsed");
  return out;
}

// ---------------------------------------------------------------------------
// SVG plotting (axes, points, reference slope lines)
// ---------------------------------------------------------------------------

struct PlotSpec {
  std::string in_csv, out_svg;
  std::string x_col, y_col;
  bool loglog = false;
  double ref_slope = 0.0;
  bool has_ref = false;
};

int run_plot(const PlotSpec& p) {
  std::ifstream in(p.in_csv);
  if (!in) {
    std::cerr << "cannot open " << p.in_csv << "\n";
    return kExitConfig;
  }
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
  }
  int xi = -1, yi = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == p.x_col) xi = static_cast<int>(i);
    if (cols[i] == p.y_col) yi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0) {
    std::cerr << "columns not found in header: " << header << "\n";
    return kExitConfig;
  }
  std::vector<std::pair<double, double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= std::max(xi, yi)) continue;
    try {
      double x = std::stod(cells[xi]);
      double y = std::stod(cells[yi]);
      if (p.loglog) {
        if (x <= 0 || y <= 0) continue;
        x = std::log10(x);
        y = std::log10(y);
      }
      pts.emplace_back(x, y);
    } catch (...) {
    }
  }
  if (pts.size() < 2) {
    std::cerr << "not enough points to plot\n";
    return kExitNumerical;
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto [x, y] : pts) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const double padx = (xmax - xmin) * 0.08 + 1e-12;
  const double pady = (ymax - ymin) * 0.08 + 1e-12;
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;
  const int W = 640, H = 480, m = 56;
  auto X = [&](double x) {
    return m + (x - xmin) / (xmax - xmin) * (W - 2 * m);
  };
  auto Y = [&](double y) {
    return H - m - (y - ymin) / (ymax - ymin) * (H - 2 * m);
  };
  std::ofstream svg(p.out_svg, std::ios::trunc);
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<line x1='" << m << "' y1='" << H - m << "' x2='" << W - m
      << "' y2='" << H - m << "' stroke='black'/>\n";
  svg << "<line x1='" << m << "' y1='" << m << "' x2='" << m << "' y2='"
      << H - m << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 4;
    const double fy = ymin + (ymax - ymin) * t / 4;
    svg << "<text x='" << X(fx) << "' y='" << H - m + 18
        << "' font-size='11' text-anchor='middle'>" << fmt(fx).substr(0, 8)
        << "</text>\n";
    svg << "<text x='" << m - 6 << "' y='" << Y(fy) + 4
        << "' font-size='11' text-anchor='end'>" << fmt(fy).substr(0, 8)
        << "</text>\n";
  }
  svg << "<text x='" << W / 2 << "' y='" << H - 12
      << "' font-size='12' text-anchor='middle'>" << p.x_col
      << (p.loglog ? " (log10)" : "") << "</text>\n";
  svg << "<text x='14' y='" << H / 2
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 "
      << H / 2 << ")'>" << p.y_col << (p.loglog ? " (log10)" : "")
      << "</text>\n";
  for (auto [x, y] : pts)
    svg << "<circle cx='" << X(x) << "' cy='" << Y(y)
        << "' r='3' fill='steelblue'/>\n";
  if (p.has_ref) {
    const double x0 = pts.front().first, y0 = pts.front().second;
    svg << "<line x1='" << X(xmin) << "' y1='"
        << Y(y0 + p.ref_slope * (xmin - x0)) << "' x2='" << X(xmax)
        << "' y2='" << Y(y0 + p.ref_slope * (xmax - x0))
        << "' stroke='crimson' stroke-dasharray='6 4'/>\n";
  }
  svg << "</svg>\n";
  std::cout << "wrote " << p.out_svg << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate: the exactness suite at fixed small sizes
// ---------------------------------------------------------------------------

int run_validate() {
  using namespace cc::lattice;
  using namespace cc::evolution;
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, double value) {
    std::printf("[%s] %-52s %.3g\n", ok ? "PASS" : "FAIL", name.c_str(),
                value);
    if (!ok) ++failures;
  };

  {
    double worst = 0, class_bad = 0;
    for (int l : {4, 8, 16}) {
      const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
      const auto us = build_us(g, ScatteringParams{});
      Eigen::MatrixXcd d(us);
      worst = std::max(worst,
                       (d.adjoint() * d -
                        Eigen::MatrixXcd::Identity(d.rows(), d.cols()))
                           .cwiseAbs()
                           .maxCoeff());
      for (const auto& lk : g.links()) {
        auto [lp, lm] = g.successors(lk.id);
        if (g.link(lp).cls != (lk.cls + 1) % 4) class_bad += 1;
        if (g.link(lm).cls != (lk.cls + 1) % 4) class_bad += 1;
      }
    }
    report("U_s unitarity (4..16 torus)", worst < 1e-12, worst);
    report("class advance l -> l+1", class_bad == 0, class_bad);
  }
  {
    bool threw = false;
    try {
      NetworkGeometry::build(5, 4, Topology::kTorus);
    } catch (const DimensionError&) {
      threw = true;
    }
    report("odd dimensions rejected", threw, threw ? 1 : 0);
  }
  {
    const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
    const auto us = build_us(g, ScatteringParams{});
    const auto u = compose_u(us, sample_disorder(g, 1, 0));
    double worst = 0;
    for (const auto& rep : spectral::quadruplet_spectrum(u, g))
      for (double r : rep.residuals) worst = std::max(worst, r);
    report("Z4 quadruplet residuals (4x4 disordered)", worst < 1e-10, worst);
  }
  {
    const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
    const ScatteringParams crit{};
    const auto us = build_us(g, crit);
    const double dk = 2 * kPi / 4;
    double worst = 0;
    for (int l = 1; l <= 4; ++l)
      for (int mx = 0; mx < 4; ++mx)
        for (int my = 0; my < 4; ++my)
          worst = std::max(
              worst, (spectral::measured_block(g, us, l, dk * mx, dk * my) -
                      spectral::bloch_block(crit, l, dk * mx, dk * my))
                         .cwiseAbs()
                         .maxCoeff());
    report("Bloch projection oracle (8x8)", worst < 1e-10, worst);

    const auto bad = build_us(g, crit, TurnConvention::kSwapLeftRight);
    const double broken = (spectral::measured_block(g, bad, 1, dk, dk) -
                           spectral::bloch_block(crit, 1, dk, dk))
                              .cwiseAbs()
                              .maxCoeff();
    report("negative control: swapped turns break the oracle", broken > 1e-3,
           broken);
  }
  {
    const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
    const auto us = build_us(g, ScatteringParams{});
    const auto t = compose_t(us, sample_disorder(g, 7, 0),
                             Regularization::point_contacts({0}));
    greens::GreenFactorization fact(t);
    const LinkId source = g.node_at(4, 4);
    const auto& col = fact.column(source);
    double worst = 0;
    for (const auto& n : g.nodes()) {
      const Complex pos(n.x, n.y);
      if (std::abs(g.displacement(pos, g.link_midpoint(0))) < 3.0) continue;
      if (std::abs(g.displacement(pos, g.link_midpoint(source))) < 2.0)
        continue;
      double in = 0, out = 0;
      for (LinkId l : n.west_east_north_south)
        (g.link(l).head == n.id ? in : out) += std::norm(col[l]);
      worst = std::max(worst, std::abs(in - out));
    }
    report("Kirchhoff double rule (point contact)", worst < 1e-10, worst);
  }
  {
    const auto g = NetworkGeometry::build(8, 8, Topology::kCylinderX);
    const auto medial = build_medial(g);
    const auto us = build_us(g, ScatteringParams{});
    greens::GreenFactorization fact(compose_u(us, sample_disorder(g, 3, 1)));
    const auto c1 = cochain::row_cycle(g, 2);
    const auto c2 = cochain::row_cycle(g, 5);
    int cell = -1;
    for (int a = 0; a < static_cast<int>(medial.two_cells.size()); ++a)
      if (std::abs(medial.two_cells[a].imag() - 2.5) < 0.1) {
        cell = a;
        break;
      }
    const auto c1b = cochain::deform_across(c1, medial, cell);
    const auto s1 = observables::conductance(g, medial, fact, c1, c2);
    const auto s2 = observables::conductance(g, medial, fact, c1b, c2);
    report("homology invariance of G", std::abs(s1.g - s2.g) < 1e-10,
           std::abs(s1.g - s2.g));
  }
  {
    const auto br = fock::bread_identity({-0.7, 0.3}, {-0.2, 1.1},
                                         {0.5, -0.4}, {0.9, 0.2}, 60);
    report("scalar supertrace identity", br.abs_diff < 1e-10, br.abs_diff);
    Eigen::MatrixXcd u(1, 1);
    u(0, 0) = std::polar(1.0, 0.37);
    const auto st = fock::gaussian_supertrace(u, -0.8, 40);
    report("full supertrace = 1", std::abs(st.full_supertrace - 1.0) < 1e-8,
           std::abs(st.full_supertrace - 1.0));
  }
  std::printf("%s\n", failures == 0 ? "validate: all checks passed"
                                    : "validate: FAILURES detected");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  // Flat key=value configuration: --config FILE supplies defaults for any
  // option not given on the command line (flags win over the file).
  std::vector<std::string> args(argv + 1, argv + argc);
  {
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--config") {
        config_path = args[i + 1];
        args.erase(args.begin() + i, args.begin() + i + 2);
        break;
      }
    if (!config_path.empty()) {
      std::ifstream cfg(config_path);
      if (!cfg) {
        std::cerr << "configuration error: cannot open " << config_path
                  << "\n";
        return kExitConfig;
      }
      std::string line;
      while (std::getline(cfg, line)) {
        const auto eq = line.find('=');
        if (line.empty() || line[0] == '#' || eq == std::string::npos)
          continue;
        auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string{}
                                        : s.substr(b, e - b + 1);
        };
        const std::string key = "--" + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(args.begin(), args.end(), key) == args.end()) {
          args.push_back(key);
          args.push_back(value);
        }
      }
    }
  }

  CLI::App app{std::string(kVersion) +
               " - network-model plateau-transition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Common {
    int size = 16;
    int lx = 0, ly = 0;
    std::string topology = "torus";
    double beta = kPi / 4;
    double mu = 0.0;
    std::uint64_t seed = 1;
    long long samples = 1000;
    int workers = 0;
    std::string out = "cc_out";
    std::string contacts;
  } c;

  auto add_common = [&](CLI::App* sub, bool with_samples = true) {
    sub->add_option("--size", c.size, "linear size L (nodes per side)");
    sub->add_option("--lx", c.lx, "override: columns");
    sub->add_option("--ly", c.ly, "override: rows");
    sub->add_option("--topology", c.topology, "torus | cylinder");
    sub->add_option("--beta", c.beta, "mixing angle (critical: pi/4)");
    sub->add_option("--mu", c.mu, "absorbing background (< 0)");
    sub->add_option("--seed", c.seed, "master seed");
    if (with_samples)
      sub->add_option("--samples", c.samples, "disorder realizations");
    sub->add_option("--workers", c.workers,
                    "worker threads (0: CC_WORKERS or hardware)");
    sub->add_option("--out", c.out, "output file prefix");
    sub->add_option("--contacts", c.contacts,
                    "point contacts \"x,y,dir;...\" (dir: l/r/u/d)");
  };

  auto* validate = app.add_subcommand("validate", "run the exactness suite");

  auto* spectrum =
      app.add_subcommand("spectrum", "clean Bloch spectrum and quadruplets");
  add_common(spectrum, false);

  auto* sigma = app.add_subcommand(
      "sigma-scan", "squared-Green correlator scan with zz projections");
  add_common(sigma);
  double r_min = 2.0, r_max = 8.0;
  sigma->add_option("--rmin", r_min, "fit window: minimum radius");
  sigma->add_option("--rmax", r_max, "fit window: maximum radius");

  auto* conductance =
      app.add_subcommand("conductance", "two-terminal Kubo conductance");
  add_common(conductance);

  auto* multifractal = app.add_subcommand(
      "multifractal", "point-contact wavefunction moment spectrum");
  add_common(multifractal);
  std::vector<double> q_grid;
  bool use_mean = false, clean = false;
  multifractal->add_option("--q", q_grid, "q grid (default -0.5..1.5)");
  multifractal->add_flag("--mean", use_mean,
                         "use shell means over disorder (default: medians)");
  multifractal->add_flag("--clean", clean, "disorder-free reference run");

  auto* circulation = app.add_subcommand(
      "circulation", "current circulation of point-contact states");
  add_common(circulation);
  bool distant = false;
  circulation->add_flag("--distant", distant,
                        "place cycles half a circumference from the contact");

  auto* fockcheck =
      app.add_subcommand("fock-check", "truncated-Fock identity checks");
  int fock_links = 2, fock_nmax = 32;
  double fock_mu = -1.0;
  std::uint64_t fock_seed = 1;
  fockcheck->add_option("--links", fock_links, "number of links (1 or 2)");
  fockcheck->add_option("--nmax", fock_nmax, "boson occupation cutoff");
  fockcheck->add_option("--mu", fock_mu, "chemical potential (< 0)");
  fockcheck->add_option("--seed", fock_seed, "seed for the random unitary");

  auto* dump = app.add_subcommand("dump-geometry", "emit lattice CSV tables");
  add_common(dump, false);

  auto* plot = app.add_subcommand("plot", "render a CSV to SVG");
  PlotSpec ps;
  plot->add_option("--in", ps.in_csv, "input CSV")->required();
  plot->add_option("--x", ps.x_col, "x column name")->required();
  plot->add_option("--y", ps.y_col, "y column name")->required();
  plot->add_option("--svg", ps.out_svg, "output SVG path")->required();
  plot->add_flag("--loglog", ps.loglog, "log10 both axes");
  auto* refopt =
      plot->add_option("--ref-slope", ps.ref_slope, "reference slope line");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  const int lx = c.lx > 0 ? c.lx : c.size;
  const int ly = c.ly > 0 ? c.ly : c.size;
  const Topology topo =
      c.topology == "cylinder" ? Topology::kCylinderX : Topology::kTorus;

  try {
    if (app.got_subcommand(validate)) return run_validate();

    if (app.got_subcommand(plot)) {
      ps.has_ref = refopt->count() > 0;
      return run_plot(ps);
    }

    if (app.got_subcommand(dump)) {
      const auto geom = lattice::NetworkGeometry::build(lx, ly, topo);
      const auto medial = lattice::build_medial(geom);
      OutputWriter w(c.out, "dump-geometry",
                     json{{"lx", lx}, {"ly", ly}, {"topology", c.topology}});
      std::vector<std::string> rows;
      for (const auto& l : geom.links())
        rows.push_back(std::to_string(l.id) + "," + std::to_string(l.tail) +
                       "," + std::to_string(l.head) + "," +
                       to_string(l.orientation) + "," +
                       std::to_string(l.cls) + "," + fmt(l.mid_x) + "," +
                       fmt(l.mid_y) + "," + (l.terminal ? "1" : "0"));
      w.write_csv("_links.csv",
                  "id,tail,head,orientation,class,mid_x,mid_y,terminal",
                  rows);
      rows.clear();
      for (const auto& n : geom.nodes())
        rows.push_back(std::to_string(n.id) + "," + std::to_string(n.x) +
                       "," + std::to_string(n.y) + "," +
                       (n.a_node ? "A" : "B"));
      w.write_csv("_nodes.csv", "id,x,y,type", rows);
      rows.clear();
      for (int e = 0; e < medial.num_edges(); ++e) {
        const auto& me = medial.edge(e);
        rows.push_back(std::to_string(e) + "," + std::to_string(me.in_plus) +
                       "," + std::to_string(me.in_minus) + "," +
                       std::to_string(me.out_plus) + "," +
                       std::to_string(me.out_minus) + "," +
                       std::to_string(me.cell_from) + "," +
                       std::to_string(me.cell_to));
      }
      w.write_csv("_medial.csv",
                  "edge,in_plus,in_minus,out_plus,out_minus,cell_from,cell_to",
                  rows);
      w.manifest["links"] = geom.num_links();
      w.manifest["nodes"] = geom.num_nodes();
      w.finish();
      std::cout << "wrote " << c.out << "_{links,nodes,medial}.csv\n";
      return 0;
    }

    if (app.got_subcommand(spectrum)) {
      OutputWriter w(c.out, "spectrum",
                     json{{"size", c.size}, {"seed", c.seed}});
      const int cells = c.size / 2;
      std::vector<std::string> rows;
      for (int my = 0; my < cells; ++my)
        for (int mx = 0; mx < cells; ++mx) {
          const double kx = 2 * kPi * mx / cells, ky = 2 * kPi * my / cells;
          Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(
              spectral::cyclic_product(0, kx, ky), false);
          for (int j = 0; j < 2; ++j) {
            const double eps = std::arg(es.eigenvalues()[j]);
            for (int m = 0; m < 4; ++m)
              rows.push_back(fmt(kx) + "," + fmt(ky) + "," +
                             std::to_string(m) + "," +
                             fmt((eps + 2 * kPi * m) / 4));
          }
        }
      w.write_csv(".csv", "k_x,k_y,l,eigphase", rows);

      const auto g4 = lattice::NetworkGeometry::build(4, 4, Topology::kTorus);
      const auto us4 = evolution::build_us(g4, evolution::ScatteringParams{});
      const auto u4 = evolution::compose_u(
          us4, evolution::sample_disorder(g4, c.seed, 0));
      json quads = json::array();
      for (const auto& rep : spectral::quadruplet_spectrum(u4, g4)) {
        json jq{{"epsilon", rep.epsilon}};
        json evs = json::array(), res = json::array();
        for (int m = 0; m < 4; ++m) {
          evs.push_back(json{{"re", rep.eigenvalues[m].real()},
                             {"im", rep.eigenvalues[m].imag()}});
          res.push_back(rep.residuals[m]);
        }
        jq["eigenvalues"] = evs;
        jq["residuals"] = res;
        quads.push_back(jq);
      }
      w.manifest["quadruplets"] = quads;
      const auto rep = spectral::dirac_check(std::max(c.size, 16));
      w.manifest["dispersion"] =
          json{{"axis_ratio", rep.axis_ratio},
               {"max_rel_deviation", rep.max_rel_deviation},
               {"isotropy_residual", rep.isotropy_residual}};
      w.finish();
      std::cout << "wrote " << c.out << ".csv\n";
      return 0;
    }

    if (app.got_subcommand(sigma)) {
      observables::SigmaScanConfig cfg;
      cfg.size = c.size;
      cfg.beta = c.beta;
      cfg.mu = c.mu;
      cfg.seed = c.seed;
      cfg.samples = c.samples;
      cfg.workers = c.workers;
      cfg.r_min = r_min;
      cfg.r_max = r_max;
      const auto res = observables::sigma_scan(cfg);
      OutputWriter w(c.out, "sigma-scan",
                     json{{"size", c.size},
                          {"beta", c.beta},
                          {"mu", res.mu_used},
                          {"seed", c.seed},
                          {"samples", c.samples},
                          {"rmin", r_min},
                          {"rmax", r_max},
                          {"odd_channel_fits", cfg.odd_channel_fits},
                          {"rotation", "counterclockwise"},
                          {"weights",
                           "j10: (1+i)/4 out+, (-1+i)/4 in+, (-1-i)/4 out-, "
                           "(1-i)/4 in-"}});
      std::vector<std::string> rows;
      for (const auto& [d, e] : res.szz) {
        const auto itu = res.uzz_raw.find(d);
        const auto itc = res.uzz_connected.find(d);
        std::string row = std::to_string(d.first) + "," +
                          std::to_string(d.second) + "," +
                          csv_complex(e.mean) + ",";
        row += itu != res.uzz_raw.end() ? csv_complex(itu->second.mean)
                                        : "nan,nan";
        row += "," + std::to_string(e.n) + "," + fmt(e.stderr_re) + "," +
               fmt(e.stderr_im) + ",";
        row += itu != res.uzz_raw.end()
                   ? fmt(itu->second.stderr_re) + "," +
                         fmt(itu->second.stderr_im)
                   : "nan,nan";
        row += ",";
        row += itc != res.uzz_connected.end() ? csv_complex(itc->second.mean)
                                              : "nan,nan";
        rows.push_back(row);
      }
      w.write_csv(".csv",
                  "dx,dy,re_szz,im_szz,re_uzz,im_uzz,n_samples,stderr_re_szz,"
                  "stderr_im_szz,stderr_re_uzz,stderr_im_uzz,re_uzz_conn,im_"
                  "uzz_conn",
                  rows);
      w.manifest["summary"] =
          json{{"exponent", res.level.exponent},
               {"exponent_err", res.level.exponent_err},
               {"n_hat", res.level.n_hat},
               {"n_hat_err", res.level.n_hat_err},
               {"n_hat_free_units", res.n_hat_free},
               {"n_hat_free_units_err", res.n_hat_free_err},
               {"imag_residual", res.level.imag_residual},
               {"ratio_raw", res.ratio_raw.ratio},
               {"ratio_raw_err", res.ratio_raw.ratio_err},
               {"ratio_connected", res.ratio_connected.ratio},
               {"ratio_connected_err", res.ratio_connected.ratio_err},
               {"ratio_inconclusive", res.ratio_raw.inconclusive},
               {"samples", res.stats.completed},
               {"skipped", res.stats.skipped},
               {"seed", c.seed}};
      w.finish();
      std::printf(
          "sigma-scan: exponent %.3f +- %.3f, n_hat %.4f (free units %.2f), "
          "ratio %.2f +- %.2f\n",
          res.level.exponent, res.level.exponent_err, res.level.n_hat,
          res.n_hat_free, res.ratio_raw.ratio, res.ratio_raw.ratio_err);
      return 0;
    }

    if (app.got_subcommand(conductance)) {
      observables::ConductanceConfig cfg;
      cfg.size = c.size;
      cfg.beta = c.beta;
      cfg.seed = c.seed;
      cfg.samples = c.samples;
      cfg.workers = c.workers;
      const auto res = observables::conductance_ensemble(cfg);
      OutputWriter w(c.out, "conductance",
                     json{{"size", c.size},
                          {"beta", c.beta},
                          {"seed", c.seed},
                          {"samples", c.samples}});
      w.write_csv(".csv", "size,mean_g,stderr_g,n_samples",
                  {std::to_string(c.size) + "," + fmt(res.mean_g) + "," +
                   fmt(res.stderr_g) + "," +
                   std::to_string(res.stats.completed)});
      w.manifest["summary"] = json{{"estimate", res.mean_g},
                                   {"stderr", res.stderr_g},
                                   {"samples", res.stats.completed},
                                   {"skipped", res.stats.skipped},
                                   {"seed", c.seed}};
      w.finish();
      std::printf("conductance: <G> = %.4f +- %.4f (%lld samples)\n",
                  res.mean_g, res.stderr_g, res.stats.completed);
      return 0;
    }

    if (app.got_subcommand(multifractal)) {
      observables::MultifractalConfig cfg;
      cfg.size = c.size;
      cfg.beta = c.beta;
      cfg.seed = c.seed;
      cfg.samples = c.samples;
      cfg.workers = c.workers;
      cfg.q_grid = q_grid;
      cfg.use_median = !use_mean;
      cfg.clean = clean;
      if (!c.contacts.empty()) {
        const auto geom = lattice::NetworkGeometry::build(
            2 * c.size, c.size, Topology::kCylinderX);
        cfg.contact = parse_contacts(geom, c.contacts).front();
      }
      const auto res = observables::multifractal_ensemble(cfg);
      OutputWriter w(c.out, "multifractal",
                     json{{"size", c.size},
                          {"beta", c.beta},
                          {"seed", c.seed},
                          {"samples", c.samples},
                          {"estimator", cfg.use_median ? "median" : "mean"},
                          {"clean", clean}});
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < res.fit.q.size(); ++i)
        rows.push_back(fmt(res.fit.q[i]) + "," + fmt(res.fit.xq[i]) + "," +
                       fmt(res.fit.xq_err[i]) + "," + fmt(res.fit.dq[i]) +
                       "," + fmt(res.fit.dq_err[i]));
      w.write_csv(".csv", "q,Xq,Xq_err,Dq,Dq_err", rows);
      w.manifest["summary"] = json{{"X", res.fit.parabola_x},
                                   {"X_err", res.fit.parabola_x_err},
                                   {"X1", res.fit.x1},
                                   {"samples", res.stats.completed},
                                   {"skipped", res.stats.skipped},
                                   {"seed", c.seed}};
      w.finish();
      std::printf(
          "multifractal: X = %.4f +- %.4f (X1 = %.3f, %lld samples)\n",
          res.fit.parabola_x, res.fit.parabola_x_err, res.fit.x1,
          res.stats.completed);
      return 0;
    }

    if (app.got_subcommand(circulation)) {
      observables::CirculationConfig cfg;
      cfg.size = c.size;
      cfg.beta = c.beta;
      cfg.seed = c.seed;
      cfg.samples = c.samples;
      cfg.workers = c.workers;
      cfg.around_contact = !distant;
      if (!c.contacts.empty()) {
        const auto geom = lattice::NetworkGeometry::build(
            2 * c.size, c.size, Topology::kCylinderX);
        cfg.contact = parse_contacts(geom, c.contacts).front();
      }
      const auto res = observables::circulation_ensemble(cfg);
      OutputWriter w(c.out, "circulation",
                     json{{"size", c.size},
                          {"beta", c.beta},
                          {"seed", c.seed},
                          {"samples", c.samples},
                          {"around_contact", cfg.around_contact}});
      std::vector<std::string> rows;
      for (const auto& r : res.rows)
        rows.push_back(std::to_string(r.rho) + "," +
                       std::to_string(r.perimeter) + "," + fmt(r.mean) + "," +
                       fmt(r.stderr_mean) + "," + fmt(r.mean_abs) + "," +
                       fmt(r.normalized));
      w.write_csv(".csv", "rho,perimeter,mean,stderr,mean_abs,normalized",
                  rows);
      w.manifest["summary"] =
          json{{"samples", res.stats.completed}, {"seed", c.seed}};
      w.finish();
      for (const auto& r : res.rows)
        std::printf("perimeter %2d: mean %.4g +- %.3g (normalized %.3f)\n",
                    r.perimeter, r.mean, r.stderr_mean, r.normalized);
      return 0;
    }

    if (app.got_subcommand(fockcheck)) {
      if (fock_links < 1 || fock_links > 2) {
        std::cerr << "--links must be 1 or 2\n";
        return kExitConfig;
      }
      Eigen::MatrixXcd u;
      if (fock_links == 1) {
        u.resize(1, 1);
        u(0, 0) = std::polar(1.0, 2 * kPi * rng::uniform(fock_seed, 0, 0));
      } else {
        const double a = 2 * kPi * rng::uniform(fock_seed, 0, 0);
        const double b = 2 * kPi * rng::uniform(fock_seed, 0, 1);
        const double g = 2 * kPi * rng::uniform(fock_seed, 0, 2);
        const double th = 0.5 * kPi * rng::uniform(fock_seed, 0, 3);
        u.resize(2, 2);
        u << std::polar(std::cos(th), a), std::polar(std::sin(th), b),
            -std::polar(std::sin(th), g), std::polar(std::cos(th), b + g - a);
      }
      int failures = 0;
      auto row = [&](const std::string& name, double resid, double tol) {
        const bool ok = resid < tol;
        if (!ok) ++failures;
        std::printf("[%s] %-44s %.3e (tol %.0e)\n", ok ? "PASS" : "FAIL",
                    name.c_str(), resid, tol);
      };
      const auto br = fock::bread_identity({-0.7, 0.3}, {-0.2, 1.1},
                                           {0.5, -0.4}, {0.9, 0.2}, 60);
      row("scalar supertrace identity", br.abs_diff, 1e-10);
      const auto st = fock::gaussian_supertrace(u, fock_mu, fock_nmax);
      row("boson trace vs det(1 - e^mu U)^{-1}",
          std::abs(st.boson_retarded - st.boson_retarded_det), 1e-8);
      row("fermion supertrace vs det(1 - e^mu U)",
          std::abs(st.fermion_retarded_str - st.fermion_retarded_det), 1e-8);
      row("fermion trace vs det(1 + e^mu U)",
          std::abs(st.fermion_retarded_tr - st.fermion_retarded_tr_det),
          1e-8);
      row("full supertrace = 1", std::abs(st.full_supertrace - 1.0), 1e-8);
      const int l2 = fock_links > 1 ? 1 : 0;
      const auto wb = fock::wick_boson_retarded(u, fock_mu, 0, l2, fock_nmax);
      row("retarded boson Wick contraction", wb.abs_diff, 1e-8);
      const auto wf =
          fock::wick_fermion_retarded(u, fock_mu, 0, l2, fock_nmax);
      row("retarded fermion Wick contraction", wf.abs_diff, 1e-8);
      row("fermion = -boson (retarded)",
          std::abs(wf.fock_value + wb.fock_value), 1e-8);
      const auto wa = fock::wick_boson_advanced(u, fock_mu, 0, l2, fock_nmax);
      row("advanced boson Wick contraction", wa.abs_diff, 1e-8);
      std::printf("truncation tail bound: %.3e\n", st.tail_bound);
      return failures == 0 ? 0 : 1;
    }
  } catch (const ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
