#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "cc/evolution.hpp"
#include "cc/lattice.hpp"
#include "cc/types.hpp"

namespace cc::spectral {

// Z4 structure: an eigenvector psi of U^4 on H_0 with eigenvalue e^{i eps}
// extends to the quadruplet Psi_m = sum_l (e^{-i(eps+2 pi m)/4} U)^l psi,
// an eigenvector of U with eigenvalue e^{i(eps+2 pi m)/4}.
Eigen::VectorXcd z4_extend(const SparseOp& u, const Eigen::VectorXcd& psi,
                           double epsilon, int m,
                           const lattice::NetworkGeometry& geom);

struct QuadrupletReport {
  double epsilon = 0.0;
  std::array<Complex, 4> eigenvalues{};
  std::array<double, 4> residuals{};
};

/// Full quadruplet decomposition via dense diagonalization of U^4 on H_0.
std::vector<QuadrupletReport> quadruplet_spectrum(
    const SparseOp& u, const lattice::NetworkGeometry& geom);

// Clean-system Bloch analysis. Unit cells sit on the clockwise plaquettes
// whose south-west corner has both coordinates even; each cell holds four
// internal links (circulating around the central plaquette) and four external
// ones (impinging on it), one of each per class. Momenta are measured in
// cell-reciprocal units: the torus grid is k = 2 pi (m, n) / (L/2).

/// Plane-wave spinor basis vector in link space (sigma = +1 or -1).
Eigen::VectorXcd spinor_plane_wave(const lattice::NetworkGeometry& geom, int l,
                                   int sigma, double kx, double ky);

/// 2x2 block of U_s mapping the class-(l-1) spinors to class-l ones,
/// at the critical point.
Eigen::Matrix2cd bloch_block(const evolution::ScatteringParams& params, int l,
                             double kx, double ky);

/// Cyclic product u_{l,l-1} ... u_{l+1,l}; identity + Dirac term + O(k^2).
Eigen::Matrix2cd cyclic_product(int l, double kx, double ky);

/// Projection oracle: the same block measured on an assembled U_s.
Eigen::Matrix2cd measured_block(const lattice::NetworkGeometry& geom,
                                const SparseOp& us, int l, double kx,
                                double ky);

/// 8x8 Bloch matrix of U_s at momentum k (basis: (l, sigma) pairs).
Eigen::MatrixXcd bloch_matrix(const evolution::ScatteringParams& params,
                              double kx, double ky);

/// All eigenvalues of the clean critical U_s on an L x L torus from Bloch
/// theory.
std::vector<Complex> clean_bloch_spectrum(int l);

struct DispersionSample {
  double kx = 0.0;
  double ky = 0.0;
  double epsilon = 0.0;  // quadruplet phase, branch closest to zero
  double ratio = 0.0;    // epsilon / |k|
};

struct DispersionReport {
  int size = 0;
  std::vector<DispersionSample> samples;   // smallest nonzero momenta
  double max_rel_deviation = 0.0;          // max |ratio - 1|
  double axis_ratio = 0.0;                 // ratio at k = (2 pi / (L/2), 0)
  double isotropy_residual = 0.0;          // |eps(d,0) - eps(0,d)|
  std::array<Complex, 4> quadruplet_centers{};
};

/// Dispersion of the clean critical system near the four Dirac points.
DispersionReport dirac_check(int l);

}  // namespace cc::spectral
