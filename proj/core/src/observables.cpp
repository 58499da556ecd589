#include "cc/observables.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cc/rng.hpp"

namespace cc::observables {

namespace {

constexpr std::uint64_t kStreamBaseNode = 0x1000000000001ULL;
constexpr std::uint64_t kStreamSource = 0x1000000000002ULL;

double median_of(std::vector<double> v) {
  if (v.empty()) throw FitError("median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double m2 = 0;
  for (double x : v) m2 += (x - mean) * (x - mean);
  return std::sqrt(m2 / (v.size() - 1));
}

}  // namespace

DisplacementTable table_from_channel(const ensemble::ChannelTable& ch) {
  DisplacementTable out;
  for (const auto& [key, cw] : ch.entries) {
    auto [dx, dy] = ensemble::unpack_key(key);
    out[{dx, dy}] = TableEntry{cw.mean(), cw.re.stderr_mean(),
                               cw.im.stderr_mean(), cw.count()};
  }
  return out;
}

LinearFit linear_fit(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw FitError("linear fit needs >= 2 points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw FitError("degenerate abscissa in linear fit");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ssr = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += r * r;
    }
    const double s2 = ssr / (n - 2);
    f.slope_err = std::sqrt(s2 / sxx);
    f.intercept_err = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& data,
                          double r_min, double r_max) {
  std::vector<double> lx, ly;
  std::set<long long> radii;
  for (const auto& [r, v] : data) {
    if (r < r_min || r > r_max || v <= 0) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(v));
    radii.insert(std::llround(r * 64));
  }
  if (radii.size() < 4)
    throw FitError("power-law fit window too small: need >= 4 radii");
  const LinearFit lin = linear_fit(lx, ly);
  PowerLawFit f;
  f.exponent = lin.slope;
  f.exponent_err = lin.slope_err;
  f.log_amplitude = lin.intercept;
  f.r_min = r_min;
  f.r_max = r_max;
  f.n_points = lin.n;
  return f;
}

namespace {

struct WindowedAmps {
  std::vector<Complex> amp;       // table value * w^2
  std::vector<double> radius;
  std::vector<Complex> raw_mean;  // table value itself
};

WindowedAmps windowed_amplitudes(const DisplacementTable& table, double r_min,
                                 double r_max) {
  WindowedAmps w;
  for (const auto& [d, entry] : table) {
    const auto [dx, dy] = d;
    if (dx == 0 && dy == 0) continue;
    const double r = std::hypot(dx, dy);
    if (r < r_min || r > r_max) continue;
    const Complex wd(dx, dy);
    w.amp.push_back(entry.mean * wd * wd);
    w.radius.push_back(r);
    w.raw_mean.push_back(entry.mean);
  }
  return w;
}

int distinct_radii(const std::vector<double>& radius) {
  std::set<long long> s;
  for (double r : radius) s.insert(std::llround(r * 64));
  return static_cast<int>(s.size());
}

}  // namespace

LevelFit fit_level_n(const DisplacementTable& szz, double r_min, double r_max,
                     int n_bootstrap, std::uint64_t seed) {
  const WindowedAmps w = windowed_amplitudes(szz, r_min, r_max);
  if (w.amp.size() < 4 || distinct_radii(w.radius) < 4)
    throw FitError("level fit window too small: need >= 4 radii");

  std::vector<double> re, im;
  for (Complex a : w.amp) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }

  LevelFit fit;
  fit.n_points = static_cast<int>(w.amp.size());
  fit.n_hat = median_of(re);
  fit.imag_residual = std::abs(median_of(im));

  std::vector<std::pair<double, double>> mag;
  for (std::size_t i = 0; i < w.amp.size(); ++i)
    mag.emplace_back(w.radius[i], std::abs(w.raw_mean[i]));
  const PowerLawFit pw = fit_power_law(mag, r_min, r_max);
  fit.exponent = pw.exponent;
  fit.exponent_err = pw.exponent_err;

  const std::size_t n = w.amp.size();
  std::vector<double> boots;
  for (int b = 1; b <= n_bootstrap; ++b) {
    std::vector<double> sample(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = static_cast<std::size_t>(
          rng::uniform(seed, b, i) * n);
      sample[i] = re[std::min(pick, n - 1)];
    }
    boots.push_back(median_of(std::move(sample)));
  }
  fit.n_hat_err = stddev_of(boots);
  return fit;
}

RatioFit amplitude_ratio(const DisplacementTable& szz,
                         const DisplacementTable& uzz, double r_min,
                         double r_max, int n_bootstrap, std::uint64_t seed) {
  std::vector<Complex> as, au;
  for (const auto& [d, entry] : uzz) {
    const auto it = szz.find(d);
    if (it == szz.end()) continue;
    const auto [dx, dy] = d;
    if (dx == 0 && dy == 0) continue;
    const double r = std::hypot(dx, dy);
    if (r < r_min || r > r_max) continue;
    const Complex wd(dx, dy);
    as.push_back(it->second.mean * wd * wd);
    au.push_back(entry.mean * wd * wd);
  }
  if (as.size() < 4)
    throw FitError("amplitude ratio needs >= 4 common displacements");

  auto complex_median = [](const std::vector<Complex>& v) {
    std::vector<double> re, im;
    for (Complex c : v) {
      re.push_back(c.real());
      im.push_back(c.imag());
    }
    return Complex(median_of(re), median_of(im));
  };

  const Complex ms = complex_median(as);
  const Complex mu_ = complex_median(au);

  RatioFit out;
  const Complex r0 = ms / mu_;
  out.ratio = r0.real();
  out.imag_ratio = r0.imag();

  const std::size_t n = as.size();
  std::vector<double> boot_re, boot_im, boot_u_re;
  for (int b = 1; b <= n_bootstrap; ++b) {
    std::vector<Complex> rs, ru;
    rs.reserve(n);
    ru.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = std::min(
          static_cast<std::size_t>(rng::uniform(seed, b, i) * n), n - 1);
      rs.push_back(as[pick]);
      ru.push_back(au[pick]);
    }
    const Complex bs = complex_median(rs);
    const Complex bu = complex_median(ru);
    boot_u_re.push_back(bu.real());
    if (std::abs(bu) > 0) {
      const Complex br = bs / bu;
      boot_re.push_back(br.real());
      boot_im.push_back(br.imag());
    }
  }
  out.ratio_err = stddev_of(boot_re);
  out.imag_ratio_err = stddev_of(boot_im);
  const double u_err = stddev_of(boot_u_re);
  out.inconclusive = std::abs(mu_.real()) < 2.0 * u_err;
  return out;
}

MultifractalFit multifractal_fit(
    const std::vector<double>& q_grid, const std::vector<double>& radii,
    const std::vector<std::vector<std::vector<double>>>& moments,
    bool use_median, int n_bootstrap, std::uint64_t seed) {
  if (q_grid.empty() || radii.size() < 4)
    throw FitError("multifractal fit needs a q grid and >= 4 radii");
  if (moments.size() != q_grid.size())
    throw FitError("moments/q grid size mismatch");
  int q1_index = -1;
  for (std::size_t i = 0; i < q_grid.size(); ++i)
    if (std::abs(q_grid[i] - 1.0) < 1e-12) q1_index = static_cast<int>(i);
  if (q1_index < 0)
    throw ParameterError("q grid must contain q = 1 (defines X_1)");

  const std::size_t n_samples = moments[0][0].size();
  std::vector<double> log_r;
  for (double r : radii) log_r.push_back(std::log(r));

  auto xq_of = [&](const std::vector<std::size_t>& pick,
                   std::vector<double>& xq) {
    xq.assign(q_grid.size(), 0.0);
    std::vector<double> vals(pick.size());
    std::vector<double> log_m(radii.size());
    for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
      for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const auto& samples = moments[qi][ri];
        for (std::size_t s = 0; s < pick.size(); ++s)
          vals[s] = samples[pick[s]];
        double est;
        if (use_median) {
          est = median_of(vals);
        } else {
          est = 0;
          for (double v : vals) est += v;
          est /= vals.size();
        }
        log_m[ri] = std::log(std::max(est, 1e-300));
      }
      const LinearFit lin = linear_fit(log_r, log_m);
      xq[qi] = -0.5 * lin.slope;
    }
  };

  auto parabola_of = [&](const std::vector<double>& xq,
                         std::vector<double>& dq) {
    dq.assign(q_grid.size(), 0.0);
    const double x1 = xq[q1_index];
    double num = 0, den = 0;
    for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
      const double q = q_grid[qi];
      dq[qi] = xq[qi] - q * x1;
      const double g = q * (1.0 - q);
      num += dq[qi] * g;
      den += g * g;
    }
    return den > 0 ? num / den : 0.0;
  };

  std::vector<std::size_t> full(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) full[s] = s;

  MultifractalFit fit;
  fit.q = q_grid;
  xq_of(full, fit.xq);
  fit.parabola_x = parabola_of(fit.xq, fit.dq);
  fit.x1 = fit.xq[q1_index];

  std::vector<std::vector<double>> boot_xq(q_grid.size());
  std::vector<std::vector<double>> boot_dq(q_grid.size());
  std::vector<double> boot_x;
  std::vector<std::size_t> pick(n_samples);
  std::vector<double> xq_b, dq_b;
  for (int b = 1; b <= n_bootstrap; ++b) {
    for (std::size_t s = 0; s < n_samples; ++s)
      pick[s] = std::min(
          static_cast<std::size_t>(rng::uniform(seed, b, s) * n_samples),
          n_samples - 1);
    xq_of(pick, xq_b);
    boot_x.push_back(parabola_of(xq_b, dq_b));
    for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
      boot_xq[qi].push_back(xq_b[qi]);
      boot_dq[qi].push_back(dq_b[qi]);
    }
  }
  fit.xq_err.resize(q_grid.size());
  fit.dq_err.resize(q_grid.size());
  for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
    fit.xq_err[qi] = stddev_of(boot_xq[qi]);
    fit.dq_err[qi] = stddev_of(boot_dq[qi]);
  }
  fit.parabola_x_err = stddev_of(boot_x);
  return fit;
}

// ---------------------------------------------------------------------------
// Conductance
// ---------------------------------------------------------------------------

namespace {

std::map<LinkId, double> cycle_link_weights(const NetworkGeometry& geom,
                                            const MedialLattice& medial,
                                            const cochain::Cycle& cycle) {
  std::map<LinkId, double> weights;
  for (const auto& [e, s] : cycle.edges) {
    for (const auto& [l, w] : cochain::chain_weights(medial, e)) {
      if (l == kNoLink || geom.link(l).terminal)
        throw GeometryError("cycle touches a terminal link");
      weights[l] += s * w.real();
    }
  }
  return weights;
}

}  // namespace

ConductanceSample conductance(const NetworkGeometry& geom,
                              const MedialLattice& medial,
                              greens::GreenFactorization& fact,
                              const cochain::Cycle& c1,
                              const cochain::Cycle& c2) {
  const auto row_w = cycle_link_weights(geom, medial, c1);
  const auto col_w = cycle_link_weights(geom, medial, c2);
  for (const auto& [l, w] : col_w)
    if (row_w.count(l))
      throw GeometryError("cycles share links; separate them");

  Complex g = 0;
  for (const auto& [l2, c] : col_w) {
    const Eigen::VectorXcd& x = fact.column(l2);
    double acc = 0;
    for (const auto& [l1, r] : row_w) acc += r * std::norm(x[l1]);
    g += Complex(c, 0.0) * acc;
  }
  return ConductanceSample{g.real(), std::abs(g.imag())};
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

namespace {

using evolution::Regularization;
using evolution::ScatteringParams;

std::pair<int, int> displacement_key(const NetworkGeometry& geom, int x,
                                     int y) {
  int dx = x % geom.lx();
  if (dx > geom.lx() / 2) dx -= geom.lx();
  if (dx <= -geom.lx() / 2) dx += geom.lx();
  int dy = y % geom.ly();
  if (dy > geom.ly() / 2) dy -= geom.ly();
  if (dy <= -geom.ly() / 2) dy += geom.ly();
  return {dx, dy};
}

std::vector<std::pair<int, int>> default_upsilon_targets(double r_max) {
  std::vector<std::pair<int, int>> t;
  for (int r = 2; r <= static_cast<int>(r_max); ++r) {
    t.emplace_back(r, 0);
    t.emplace_back(0, r);
  }
  for (int r = 2; r * std::sqrt(2.0) <= r_max; ++r) t.emplace_back(r, r);
  return t;
}

}  // namespace

namespace {

DisplacementTable odd_channel(const DisplacementTable& t) {
  DisplacementTable out;
  for (const auto& [d, e] : t)
    if (((d.first + d.second) % 2 + 2) % 2 == 1) out[d] = e;
  return out;
}

}  // namespace

SigmaScanResult sigma_scan(const SigmaScanConfig& config) {
  using namespace cc::lattice;
  const auto geom =
      NetworkGeometry::build(config.size, config.size, Topology::kTorus);
  const auto medial = build_medial(geom);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);
  // Power-law window fits need the absorption length to exceed the typical
  // (diffusive) path length across the window, which scales like r^2; the
  // default couples mu to 1/L^2 rather than 1/L.
  const double mu = config.mu != 0.0
                        ? config.mu
                        : -1.0 / (double(config.size) * config.size);
  const auto reg = Regularization::absorbing(mu);
  const int bases = std::max(config.bases_per_realization, 1);

  const auto targets = config.upsilon_targets.empty()
                           ? default_upsilon_targets(config.r_max)
                           : config.upsilon_targets;

  // Per-edge holomorphic weights, once.
  std::vector<cochain::WeightTable> wz(medial.num_edges());
  for (int e = 0; e < medial.num_edges(); ++e)
    wz[e] = cochain::j10_weights(medial, e);

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.samples;
  ec.workers = config.workers;
  ec.checkpoint_path = config.checkpoint_path;
  ec.checkpoint_every = config.checkpoint_every;
  ec.descriptor = "sigma-scan L=" + std::to_string(config.size) +
                  " beta=" + std::to_string(config.beta) +
                  " mu=" + std::to_string(mu) +
                  " bases=" + std::to_string(bases);

  auto scan_realization = [&](greens::GreenFactorization& fact, int base_node,
                              ensemble::SampleResult& out) {
    const cochain::WeightTable& w0 = wz[base_node];
    const NodeRecord& n0 = geom.node(base_node);

    std::array<const Eigen::VectorXcd*, 4> cols{};
    for (int j = 0; j < 4; ++j) cols[j] = &fact.column(w0[j].first);

    Complex abar = 0;  // advanced-diagonal amplitude at the base edge
    for (int j = 0; j < 4; ++j)
      abar += std::conj(w0[j].second) * ((*cols[j])[w0[j].first] - 1.0);

    for (int e = 0; e < medial.num_edges(); ++e) {
      Complex v = 0;
      for (const auto& [l1, we] : wz[e]) {
        Complex s = 0;
        for (int j = 0; j < 4; ++j)
          s += w0[j].second * std::norm((*cols[j])[l1]);
        v += we * s;
      }
      const NodeRecord& ne = geom.node(e);
      const auto key = displacement_key(geom, ne.x - n0.x, ne.y - n0.y);
      out.values.emplace_back("szz", ensemble::pack_key(key.first, key.second),
                              v);
    }

    for (const auto& [tx, ty] : targets) {
      const NodeId tn = geom.node_at(n0.x + tx, n0.y + ty);
      const cochain::WeightTable& wt = wz[tn];
      Complex a = 0;
      for (int j = 0; j < 4; ++j)
        a += wt[j].second * fact.diagonal_t_green(wt[j].first);
      const auto key = ensemble::pack_key(tx, ty);
      out.values.emplace_back("uzz", key, a * std::conj(abar));
      out.values.emplace_back("ua", key, a);
      out.values.emplace_back("uabar", ensemble::pack_key(0, 0), abar);
    }
  };

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    const auto disorder = evolution::sample_disorder(geom, config.seed, index);
    const SparseOp t = evolution::compose_t(us, disorder, reg);
    greens::GreenFactorization fact(t);
    for (int b = 0; b < bases; ++b) {
      const int base_node = static_cast<int>(
          rng::uniform(config.seed, index, kStreamBaseNode + b) *
          geom.num_nodes());
      scan_realization(fact, base_node, out);
    }
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);

  SigmaScanResult res;
  res.mu_used = mu;
  res.stats = run.stats;
  res.szz = table_from_channel(run.accumulators.channels.at("szz"));
  res.uzz_raw = table_from_channel(run.accumulators.channels.at("uzz"));

  // Connected part: subtract the product of the (displacement-independent)
  // one-point means.
  const Complex mean_abar =
      run.accumulators.at("uabar", ensemble::pack_key(0, 0)).mean();
  res.uzz_connected = res.uzz_raw;
  const auto ua = table_from_channel(run.accumulators.channels.at("ua"));
  for (auto& [d, entry] : res.uzz_connected) {
    const auto it = ua.find(d);
    if (it != ua.end())
      entry.mean -= it->second.mean * std::conj(mean_abar);
  }

  // Deterministic free-theory reference at the same geometry and mu: one
  // clean realization, both sublattice base types.
  {
    evolution::DisorderRealization clean;
    clean.master_seed = config.seed;
    clean.index = 0;
    clean.phases.assign(geom.num_links(), 0.0);
    greens::GreenFactorization fact(evolution::compose_t(us, clean, reg));
    ensemble::ChannelTable table;
    ensemble::SampleResult out;
    for (int b : {0, 1}) scan_realization(fact, geom.node_at(b, 0), out);
    for (const auto& [ch, key, value] : out.values)
      if (ch == "szz") table.add(key, value);
    res.szz_clean = table_from_channel(table);
  }

  const auto& fit_szz =
      config.odd_channel_fits ? odd_channel(res.szz) : res.szz;
  res.level = fit_level_n(fit_szz, config.r_min, config.r_max);
  res.ratio_raw = amplitude_ratio(
      fit_szz,
      config.odd_channel_fits ? odd_channel(res.uzz_raw) : res.uzz_raw,
      config.r_min, config.r_max);
  res.ratio_connected = amplitude_ratio(
      fit_szz,
      config.odd_channel_fits ? odd_channel(res.uzz_connected)
                              : res.uzz_connected,
      config.r_min, config.r_max);

  // Amplitude in units of the clean reference (cancels the lattice
  // normalization of the projection).
  {
    std::vector<double> ratios;
    for (const auto& [d, e] : fit_szz) {
      const double r = std::hypot(d.first, d.second);
      if (r < config.r_min || r > config.r_max) continue;
      const auto it = res.szz_clean.find(d);
      if (it == res.szz_clean.end()) continue;
      const Complex w(d.first, d.second);
      const double clean_amp = (it->second.mean * w * w).real();
      if (std::abs(clean_amp) < 1e-6) continue;
      ratios.push_back((e.mean * w * w).real() / clean_amp);
    }
    if (ratios.size() >= 4) {
      res.n_hat_free = median_of(ratios);
      std::vector<double> boots;
      const std::size_t n = ratios.size();
      for (int b = 1; b <= 200; ++b) {
        std::vector<double> sample(n);
        for (std::size_t i = 0; i < n; ++i)
          sample[i] = ratios[std::min(
              static_cast<std::size_t>(rng::uniform(config.seed, b, i) * n),
              n - 1)];
        boots.push_back(median_of(std::move(sample)));
      }
      res.n_hat_free_err = stddev_of(boots);
    }
  }
  return res;
}

ConductanceResult conductance_ensemble(const ConductanceConfig& config) {
  using namespace cc::lattice;
  const auto geom =
      NetworkGeometry::build(config.size, config.size, Topology::kCylinderX);
  const auto medial = build_medial(geom);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);

  const int y1 = config.y1 > 0 ? config.y1 : config.size / 3;
  const int y2 = config.y2 > 0 ? config.y2 : 2 * config.size / 3;
  if (y1 <= 0 || y2 >= config.size - 1 || y1 >= y2)
    throw GeometryError("cycles must sit strictly between the terminals");
  const cochain::Cycle c1 = cochain::row_cycle(geom, y1);
  const cochain::Cycle c2 = cochain::row_cycle(geom, y2);

  cochain::Cycle c1_deformed;
  if (config.homology_diagnostic) {
    // Push c1 across a 2-cell adjacent to the row (its center sits at
    // y1 +- 1/2 with odd plaquette parity).
    int cell = -1;
    for (int a = 0; a < static_cast<int>(medial.two_cells.size()); ++a) {
      const Complex c = medial.two_cells[a];
      if (std::abs(c.imag() - (y1 + 0.5)) < 0.25) {
        cell = a;
        break;
      }
    }
    if (cell < 0) throw GeometryError("no 2-cell adjacent to cycle row");
    c1_deformed = cochain::deform_across(c1, medial, cell);
  }

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.samples;
  ec.workers = config.workers;
  ec.checkpoint_path = config.checkpoint_path;
  ec.checkpoint_every = config.checkpoint_every;
  ec.descriptor = "conductance L=" + std::to_string(config.size) +
                  " beta=" + std::to_string(config.beta) +
                  " y1=" + std::to_string(y1) + " y2=" + std::to_string(y2);

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    const auto disorder = evolution::sample_disorder(geom, config.seed, index);
    const SparseOp t = evolution::compose_u(us, disorder);
    greens::GreenFactorization fact(t);
    const ConductanceSample s = conductance(geom, medial, fact, c1, c2);
    out.values.emplace_back("g", 0, Complex(s.g, 0));
    out.values.emplace_back("imag", 0, Complex(s.imag_part, 0));
    if (config.homology_diagnostic) {
      const ConductanceSample s2 =
          conductance(geom, medial, fact, c1_deformed, c2);
      out.values.emplace_back("dg", 0, Complex(std::abs(s2.g - s.g), 0));
    }
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);
  ConductanceResult res;
  res.stats = run.stats;
  const auto& g = run.accumulators.at("g", 0);
  res.mean_g = g.mean().real();
  res.stderr_g = g.re.stderr_mean();
  const auto& im = run.accumulators.at("imag", 0);
  res.max_imag = im.mean().real() + 10 * im.re.stderr_mean();
  if (config.homology_diagnostic) {
    const auto& dg = run.accumulators.channels.at("dg").entries.at(0);
    res.max_homology_delta = dg.re.mean + 10 * dg.re.stderr_mean();
  }
  return res;
}

MultifractalResult multifractal_ensemble(const MultifractalConfig& config) {
  using namespace cc::lattice;
  // Point-contact states live on an open cylinder of doubled circumference:
  // on a closed torus the resolvent (1 - UQ)^{-1} is dominated by
  // near-resonant modes (exactly so in the clean system), and a square
  // cylinder leaves a wrap-image floor inside the fit window.
  const auto geom = NetworkGeometry::build(2 * config.size, config.size,
                                           Topology::kCylinderX);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);

  std::vector<double> q_grid = config.q_grid;
  if (q_grid.empty())
    for (int i = -2; i <= 6; ++i) q_grid.push_back(0.25 * i);

  const double r_max = config.r_max > 0 ? config.r_max : config.size / 4.0;
  LinkId contact = config.contact;
  if (contact == 0)
    contact = geom.lx() * (config.size / 2);  // mid-height horizontal link
  const Complex contact_mid = geom.link_midpoint(contact);

  // Integer radial shells around the contact.
  std::vector<std::vector<LinkId>> shells;
  std::vector<double> radii;
  for (int r = static_cast<int>(config.r_min); r <= static_cast<int>(r_max);
       ++r) {
    std::vector<LinkId> shell;
    for (LinkId l = 0; l < geom.num_links(); ++l) {
      if (geom.link(l).terminal) continue;
      const double d =
          std::abs(geom.displacement(geom.link_midpoint(l), contact_mid));
      if (std::llround(d) == r) shell.push_back(l);
    }
    if (!shell.empty()) {
      shells.push_back(std::move(shell));
      radii.push_back(r);
    }
  }

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.clean ? 1 : config.samples;
  ec.workers = config.workers;
  ec.checkpoint_path = config.checkpoint_path;
  ec.checkpoint_every = config.checkpoint_every;
  ec.retain_channels = {"mom"};
  ec.descriptor = "multifractal L=" + std::to_string(config.size) +
                  " beta=" + std::to_string(config.beta) +
                  " contact=" + std::to_string(contact) +
                  (config.clean ? " clean" : "");

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    evolution::DisorderRealization disorder;
    if (config.clean) {
      disorder.master_seed = config.seed;
      disorder.index = index;
      disorder.phases.assign(geom.num_links(), 0.0);
    } else {
      disorder = evolution::sample_disorder(geom, config.seed, index);
    }
    const SparseOp u = evolution::compose_u(us, disorder);
    const Eigen::VectorXcd psi = greens::point_contact_state(u, contact);

    for (std::size_t ri = 0; ri < shells.size(); ++ri) {
      for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
        double acc = 0;
        for (LinkId l : shells[ri]) {
          const double m = std::max(std::norm(psi[l]), 1e-300);
          acc += std::pow(m, q_grid[qi]);
        }
        acc /= shells[ri].size();
        out.values.emplace_back(
            "mom",
            ensemble::pack_key(static_cast<int>(qi), static_cast<int>(ri)),
            Complex(acc, 0));
      }
    }
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);

  const auto& mom = run.accumulators.channels.at("mom");
  std::vector<std::vector<std::vector<double>>> moments(
      q_grid.size(), std::vector<std::vector<double>>(radii.size()));
  for (std::size_t qi = 0; qi < q_grid.size(); ++qi)
    for (std::size_t ri = 0; ri < radii.size(); ++ri)
      moments[qi][ri] = mom.samples.at(
          ensemble::pack_key(static_cast<int>(qi), static_cast<int>(ri)));

  MultifractalResult res;
  res.radii = radii;
  res.stats = run.stats;
  res.fit = multifractal_fit(q_grid, radii, moments, config.use_median,
                             config.clean ? 0 : config.n_bootstrap,
                             config.seed);
  return res;
}

CirculationResult circulation_ensemble(const CirculationConfig& config) {
  using namespace cc::lattice;
  // Open cylinder (see multifractal_ensemble); the contractible cycles
  // enclose the contact, where the disorder-averaged outflow acquires a
  // rotational component off criticality. Far from the contact the mean
  // elementary circulation vanishes identically (each medial edge borders
  // two 2-cells with opposite signs), so distant cycles carry no signal.
  const auto geom = NetworkGeometry::build(2 * config.size, config.size,
                                           Topology::kCylinderX);
  const auto medial = build_medial(geom);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);

  LinkId contact = config.contact;
  if (contact == 0) contact = geom.lx() * (config.size / 2);
  const NodeId contact_head = geom.link(contact).head;
  const Complex near_point = geom.link_midpoint(contact);
  auto nearest_cell = [&](Complex target) {
    int cell = 0;
    double best = 1e300;
    for (int a = 0; a < static_cast<int>(medial.two_cells.size()); ++a) {
      const double d =
          std::abs(geom.displacement(medial.two_cells[a], target));
      if (d < best) {
        best = d;
        cell = a;
      }
    }
    return cell;
  };

  // Square cycles of side k+1, centered on the contact or displaced by half
  // the circumference.
  const Complex center =
      config.around_contact ? near_point
                            : near_point + Complex(config.size, 0.0);
  std::vector<cochain::Cycle> cycles;
  for (int k : config.rhos) {
    const int corner = nearest_cell(center - Complex(k + 1, 0.0));
    cycles.push_back(cochain::boundary_cycle(
        medial, cochain::two_cell_block(geom, medial, corner, k + 1)));
  }

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.samples;
  ec.workers = config.workers;
  ec.checkpoint_path = config.checkpoint_path;
  ec.checkpoint_every = config.checkpoint_every;
  ec.descriptor = "circulation L=" + std::to_string(config.size) +
                  " beta=" + std::to_string(config.beta) +
                  (config.around_contact ? " around-contact" : " distant");

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    const auto disorder = evolution::sample_disorder(geom, config.seed, index);
    const SparseOp u = evolution::compose_u(us, disorder);
    const Eigen::VectorXcd psi = greens::point_contact_state(u, contact);
    Eigen::VectorXcd j(geom.num_links());
    for (LinkId l = 0; l < geom.num_links(); ++l) j[l] = std::norm(psi[l]);
    const auto cochain1 =
        cochain::current_cochain(geom, medial, j, 1e-8, {contact_head});
    for (std::size_t k = 0; k < cycles.size(); ++k) {
      const Complex c = cochain::circulation(cochain1, cycles[k]);
      out.values.emplace_back("circ", static_cast<ensemble::Key>(k),
                              c);
      out.values.emplace_back("abs", static_cast<ensemble::Key>(k),
                              Complex(std::abs(c.real()), 0));
    }
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);
  CirculationResult res;
  res.stats = run.stats;
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    CirculationResult::PerRho row;
    row.rho = config.rhos[k];
    row.perimeter = static_cast<int>(cycles[k].edges.size());
    const auto& c = run.accumulators.at("circ", static_cast<ensemble::Key>(k));
    const auto& a = run.accumulators.at("abs", static_cast<ensemble::Key>(k));
    row.mean = c.mean().real();
    row.stderr_mean = c.re.stderr_mean();
    row.mean_abs = a.mean().real();
    row.normalized = row.mean_abs > 0 ? std::abs(row.mean) / row.mean_abs : 0;
    res.rows.push_back(row);
  }
  return res;
}

LocalizationResult localization_scan(const LocalizationConfig& config) {
  using namespace cc::lattice;
  const auto geom =
      NetworkGeometry::build(config.size, config.size, Topology::kTorus);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);
  const double mu =
      config.mu != 0.0 ? config.mu : evolution::default_mu(config.size);
  const auto reg = Regularization::absorbing(mu);
  const double r_max = config.r_max > 0 ? config.r_max : config.size / 3.0;

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.samples;
  ec.workers = config.workers;
  ec.retain_channels = {"sig"};
  ec.descriptor = "localization L=" + std::to_string(config.size) +
                  " beta=" + std::to_string(config.beta) +
                  " mu=" + std::to_string(mu);

  const int rmin = static_cast<int>(config.r_min);
  const int rmax = static_cast<int>(r_max);

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    const auto disorder = evolution::sample_disorder(geom, config.seed, index);
    const SparseOp t = evolution::compose_t(us, disorder, reg);
    greens::GreenFactorization fact(t);
    const LinkId source = static_cast<LinkId>(
        rng::uniform(config.seed, index, kStreamSource) * geom.num_links());
    const Eigen::VectorXcd& x = fact.column(source);
    const Complex smid = geom.link_midpoint(source);

    std::vector<double> acc(rmax + 1, 0.0);
    std::vector<int> cnt(rmax + 1, 0);
    for (LinkId l = 0; l < geom.num_links(); ++l) {
      const int r = static_cast<int>(std::llround(
          std::abs(geom.displacement(geom.link_midpoint(l), smid))));
      if (r < rmin || r > rmax) continue;
      acc[r] += std::norm(x[l]);
      ++cnt[r];
    }
    for (int r = rmin; r <= rmax; ++r)
      if (cnt[r] > 0)
        out.values.emplace_back("sig", r, Complex(acc[r] / cnt[r], 0));
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);
  LocalizationResult res;
  res.stats = run.stats;
  std::vector<double> xs, ys;
  for (int r = rmin; r <= rmax; ++r) {
    const auto it = run.accumulators.channels.at("sig").entries.find(r);
    if (it == run.accumulators.channels.at("sig").entries.end()) continue;
    res.radii.push_back(r);
    res.mean_sigma.push_back(it->second.mean().real());
    res.stderr_sigma.push_back(it->second.re.stderr_mean());
    xs.push_back(r);
    ys.push_back(std::log(std::max(it->second.mean().real(), 1e-300)));
  }
  res.decay = linear_fit(xs, ys);

  // Bootstrap the slope over realizations for an honest error bar.
  const auto& samples = run.accumulators.channels.at("sig").samples;
  const std::size_t n = samples.begin()->second.size();
  std::vector<double> slopes;
  for (int b = 1; b <= config.n_bootstrap; ++b) {
    std::vector<double> by;
    by.reserve(xs.size());
    for (std::size_t ri = 0; ri < res.radii.size(); ++ri) {
      const auto& vec = samples.at(static_cast<ensemble::Key>(res.radii[ri]));
      double acc = 0;
      for (std::size_t s = 0; s < n; ++s)
        acc += vec[std::min(static_cast<std::size_t>(
                                rng::uniform(config.seed, b, s) * n),
                            n - 1)];
      by.push_back(std::log(std::max(acc / n, 1e-300)));
    }
    slopes.push_back(linear_fit(xs, by).slope);
  }
  if (!slopes.empty()) res.decay.slope_err = stddev_of(slopes);
  return res;
}

CleanDecayResult clean_decay(int size, double r_min, double r_max) {
  using namespace cc::lattice;
  // Open cylinder, doubled circumference; see multifractal_ensemble.
  const auto geom =
      NetworkGeometry::build(2 * size, size, Topology::kCylinderX);
  const ScatteringParams critical{};
  const SparseOp us = evolution::build_us(geom, critical);
  const LinkId contact = geom.lx() * (size / 2);  // mid-height, x = 0
  const Eigen::VectorXcd psi = greens::point_contact_state(us, contact);
  const Complex cmid = geom.link_midpoint(contact);
  const double rmax = r_max > 0 ? r_max : size / 4.0;

  std::map<int, std::pair<double, int>> shells;
  for (LinkId l = 0; l < geom.num_links(); ++l) {
    if (geom.link(l).terminal) continue;
    const int r = static_cast<int>(
        std::llround(std::abs(geom.displacement(geom.link_midpoint(l), cmid))));
    if (r < r_min || r > rmax) continue;
    shells[r].first += std::norm(psi[l]);
    shells[r].second += 1;
  }
  CleanDecayResult res;
  std::vector<double> xs, ys;
  for (const auto& [r, acc] : shells) {
    const double mean = acc.first / acc.second;
    res.shell_means.emplace_back(r, mean);
    xs.push_back(std::log(static_cast<double>(r)));
    ys.push_back(std::log(std::max(mean, 1e-300)));
  }
  const LinearFit lin = linear_fit(xs, ys);
  res.slope = lin.slope;
  res.slope_err = lin.slope_err;
  return res;
}

MonoTypeResult mono_type_scan(const MonoTypeConfig& config) {
  using namespace cc::lattice;
  const auto geom =
      NetworkGeometry::build(config.size, config.size, Topology::kTorus);
  const ScatteringParams params{config.beta};
  const SparseOp us = evolution::build_us(geom, params);
  const double mu =
      config.mu != 0.0 ? config.mu : evolution::default_mu(config.size);
  const auto reg = Regularization::absorbing(mu);

  const LinkId from = 0;
  const LinkId near = geom.left_successor(from);
  // A horizontal link in the middle of the lattice, far from `from`.
  const LinkId far = config.size / 2 + config.size * (config.size / 2);

  ensemble::EnsembleConfig ec;
  ec.master_seed = config.seed;
  ec.samples = config.samples;
  ec.workers = config.workers;
  ec.descriptor = "mono-type L=" + std::to_string(config.size) +
                  " mu=" + std::to_string(mu);

  auto kernel = [&](std::uint64_t index) {
    ensemble::SampleResult out;
    const auto disorder = evolution::sample_disorder(geom, config.seed, index);
    const SparseOp t = evolution::compose_t(us, disorder, reg);
    greens::GreenFactorization fact(t);
    const Eigen::VectorXcd& x = fact.column(from);
    out.values.emplace_back("p1", from, x[from]);
    out.values.emplace_back("p1", near, x[near]);
    out.values.emplace_back("p1", far, x[far]);
    out.values.emplace_back("p2", 0, x[near] * x[far]);
    out.values.emplace_back("p2", 1, x[near] * x[near]);
    return out;
  };

  const auto run = ensemble::run_ensemble(ec, kernel);
  MonoTypeResult res;
  res.stats = run.stats;
  for (LinkId to : {from, near, far}) {
    const auto& cw = run.accumulators.at("p1", to);
    res.p1.push_back({from, to, cw.mean(), cw.re.stderr_mean(),
                      cw.im.stderr_mean(), to == from ? 1.0 : 0.0});
  }
  for (ensemble::Key k : {0, 1}) {
    const auto& cw = run.accumulators.at("p2", k);
    res.p2.push_back({from, static_cast<LinkId>(k), cw.mean(),
                      cw.re.stderr_mean(), cw.im.stderr_mean(), 0.0});
  }
  return res;
}

}  // namespace cc::observables
