#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cc/cochain.hpp"
#include "cc/ensemble.hpp"
#include "cc/evolution.hpp"
#include "cc/greens.hpp"
#include "cc/lattice.hpp"
#include "cc/types.hpp"

namespace cc::observables {

using lattice::MedialLattice;
using lattice::NetworkGeometry;

// ---------------------------------------------------------------------------
// Reduced tables and fits
// ---------------------------------------------------------------------------

struct TableEntry {
  Complex mean;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  long long n = 0;
};

/// Ensemble means keyed by minimal-image displacement (dx, dy).
using DisplacementTable = std::map<std::pair<int, int>, TableEntry>;

DisplacementTable table_from_channel(const ensemble::ChannelTable& ch);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  int n = 0;
};

/// Unweighted least squares y = a + b x with residual-based errors.
LinearFit linear_fit(const std::vector<double>& x,
                     const std::vector<double>& y);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_err = 0.0;
  double log_amplitude = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  int n_points = 0;
};

/// Log-log fit of positive values against radius over [r_min, r_max].
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& data,
                          double r_min, double r_max);

struct LevelFit {
  double n_hat = 0.0;        // median over displacements of Re[szz * w^2]
  double n_hat_err = 0.0;    // bootstrap
  double exponent = 0.0;     // log-log slope of |szz| vs |d| (target -2)
  double exponent_err = 0.0;
  double imag_residual = 0.0;  // |median Im[szz * w^2]|
  int n_points = 0;
};

LevelFit fit_level_n(const DisplacementTable& szz, double r_min, double r_max,
                     int n_bootstrap = 200, std::uint64_t seed = 11);

struct RatioFit {
  double ratio = 0.0;  // Re of the joint amplitude ratio (target -n)
  double ratio_err = 0.0;
  double imag_ratio = 0.0;
  double imag_ratio_err = 0.0;
  bool inconclusive = false;  // upsilon indistinguishable from zero
};

RatioFit amplitude_ratio(const DisplacementTable& szz,
                         const DisplacementTable& uzz, double r_min,
                         double r_max, int n_bootstrap = 200,
                         std::uint64_t seed = 13);

struct MultifractalFit {
  std::vector<double> q;
  std::vector<double> xq, xq_err;  // X_q = -slope/2 of log moment vs log r
  std::vector<double> dq, dq_err;  // Delta_q = X_q - q X_1
  double x1 = 0.0;
  double parabola_x = 0.0;  // least-squares X in Delta_q ~ X q(1-q)
  double parabola_x_err = 0.0;
};

/// moments[qi][ri][sample]: per-realization shell averages of |psi|^{2q}.
MultifractalFit multifractal_fit(
    const std::vector<double>& q_grid, const std::vector<double>& radii,
    const std::vector<std::vector<std::vector<double>>>& moments,
    bool use_median = true, int n_bootstrap = 200, std::uint64_t seed = 17);

// ---------------------------------------------------------------------------
// Kubo conductance
// ---------------------------------------------------------------------------

struct ConductanceSample {
  double g = 0.0;
  double imag_part = 0.0;  // diagnostic; the double sum is real
};

/// G(C1, C2): double sum of the squared-Green double 1-cochain over two
/// cycles. Cycles must stay off the terminal links and not share links.
ConductanceSample conductance(const NetworkGeometry& geom,
                              const MedialLattice& medial,
                              greens::GreenFactorization& fact,
                              const cochain::Cycle& c1,
                              const cochain::Cycle& c2);

// ---------------------------------------------------------------------------
// Ensemble pipelines
// ---------------------------------------------------------------------------

struct ScanBase {
  int size = 16;
  double beta = kPi / 4;
  std::uint64_t seed = 1;
  long long samples = 100;
  int workers = 0;
  std::string checkpoint_path;
  long long checkpoint_every = 0;
};

struct SigmaScanConfig : ScanBase {
  double mu = 0.0;   // 0: -1/L^2 (see notes in sigma_scan)
  double r_min = 2.0;
  double r_max = 8.0;
  int bases_per_realization = 2;
  // Fits use only odd-sum displacements by default: same-sublattice medial
  // pairs carry no smooth signal (chiral selection rule of the E = 0 lattice).
  bool odd_channel_fits = true;
  std::vector<std::pair<int, int>> upsilon_targets;  // empty: default window
};

struct SigmaScanResult {
  DisplacementTable szz;
  DisplacementTable szz_clean;  // deterministic free-theory reference
  DisplacementTable uzz_raw;
  DisplacementTable uzz_connected;
  LevelFit level;
  double n_hat_free = 0.0;      // amplitude in units of the clean reference
  double n_hat_free_err = 0.0;
  RatioFit ratio_raw;
  RatioFit ratio_connected;
  double mu_used = 0.0;
  ensemble::RunStats stats;
};

/// Squared-Green correlator scan on a critical (or off-critical) torus.
SigmaScanResult sigma_scan(const SigmaScanConfig& config);

struct ConductanceConfig : ScanBase {
  int y1 = 0;  // 0: ly/3
  int y2 = 0;  // 0: 2 ly/3
  bool homology_diagnostic = false;
};

struct ConductanceResult {
  double mean_g = 0.0;
  double stderr_g = 0.0;
  double max_imag = 0.0;
  double max_homology_delta = 0.0;
  ensemble::RunStats stats;
};

/// Two-terminal conductance on a cylinder, terminals at the open edges.
ConductanceResult conductance_ensemble(const ConductanceConfig& config);

struct MultifractalConfig : ScanBase {
  std::vector<double> q_grid;  // empty: -0.5 .. 1.5 step 0.25
  double r_min = 2.0;
  double r_max = 0.0;  // 0: size/4
  bool use_median = true;
  int n_bootstrap = 200;
  LinkId contact = 0;
  bool clean = false;  // U = U_s, no disorder (single realization)
};

struct MultifractalResult {
  MultifractalFit fit;
  std::vector<double> radii;
  ensemble::RunStats stats;
};

MultifractalResult multifractal_ensemble(const MultifractalConfig& config);

struct CirculationConfig : ScanBase {
  std::vector<int> rhos = {1, 2, 3, 4, 5};  // square cycles, perimeter 4(rho+1)
  LinkId contact = 0;
  // true: cycles enclose the contact (carry the parity-odd outflow signal on
  // top of a beta-even short-scale background); false: cycles sit half a
  // circumference away, where the critical mean circulation vanishes.
  bool around_contact = true;
};

struct CirculationResult {
  struct PerRho {
    int rho = 0;
    int perimeter = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double mean_abs = 0.0;
    double normalized = 0.0;  // |mean| / mean_abs
  };
  std::vector<PerRho> rows;
  ensemble::RunStats stats;
};

/// Current circulation of point-contact states around contractible cycles.
CirculationResult circulation_ensemble(const CirculationConfig& config);

struct LocalizationConfig : ScanBase {
  double mu = 0.0;  // 0: default_mu(size)
  double r_min = 1.0;
  double r_max = 0.0;  // 0: size/3
  int n_bootstrap = 200;
};

struct LocalizationResult {
  std::vector<double> radii;
  std::vector<double> mean_sigma;
  std::vector<double> stderr_sigma;
  LinearFit decay;  // log E(sigma) vs r
  ensemble::RunStats stats;
};

/// Distance decay of E(sigma): linear log for localized, power law at
/// criticality.
LocalizationResult localization_scan(const LocalizationConfig& config);

struct CleanDecayResult {
  double slope = 0.0;
  double slope_err = 0.0;
  std::vector<std::pair<double, double>> shell_means;  // (r, mean |psi|^2)
};

/// Clean critical system: |psi_c|^2 shell averages and their log-log slope.
CleanDecayResult clean_decay(int size, double r_min = 2.0, double r_max = 0.0);

struct MonoTypeConfig : ScanBase {
  double mu = 0.0;  // 0: default_mu(size)
};

struct MonoTypeResult {
  struct Entry {
    LinkId from = 0;
    LinkId to = 0;
    Complex mean;
    double stderr_re = 0.0;
    double stderr_im = 0.0;
    double expected = 0.0;  // delta_{from,to}
  };
  std::vector<Entry> p1;  // E G(from -> to)
  std::vector<Entry> p2;  // E G(from -> a) G(from -> b), a != b
  ensemble::RunStats stats;
};

/// Mono-type triviality: disorder averages of retarded Green products
/// collapse onto delta.
MonoTypeResult mono_type_scan(const MonoTypeConfig& config);

}  // namespace cc::observables
