#include "cc/spectral.hpp"

#include <cmath>
#include <complex>
#include <string>

namespace cc::spectral {

namespace {

Complex i_power(int l) {
  switch (((l % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

double kappa_of(int l, double kx, double ky) {
  switch (((l % 4) + 4) % 4) {
    case 1: return -ky;
    case 2: return kx;
    case 3: return ky;
    default: return -kx;  // l = 0 block, u_{0,3}
  }
}

}  // namespace

Eigen::VectorXcd z4_extend(const SparseOp& u, const Eigen::VectorXcd& psi,
                           double epsilon, int m,
                           const lattice::NetworkGeometry& geom) {
  if (psi.size() != u.rows())
    throw DomainError("z4_extend: vector size mismatch");
  double off_h0 = 0.0;
  for (int i = 0; i < psi.size(); ++i)
    if (geom.link(i).cls != 0) off_h0 += std::norm(psi[i]);
  if (off_h0 > 1e-16 * psi.squaredNorm())
    throw DomainError("z4_extend: psi must be supported on H_0");

  const Complex lambda = std::polar(1.0, -(epsilon + 2.0 * kPi * m) / 4.0);
  Eigen::VectorXcd term = psi;
  Eigen::VectorXcd sum = psi;
  for (int l = 1; l < 4; ++l) {
    term = lambda * (u * term).eval();
    sum += term;
  }
  return sum;
}

std::vector<QuadrupletReport> quadruplet_spectrum(
    const SparseOp& u, const lattice::NetworkGeometry& geom) {
  const int n = geom.num_links();
  std::vector<int> h0;
  for (LinkId l = 0; l < n; ++l)
    if (geom.link(l).cls == 0) h0.push_back(l);

  Eigen::MatrixXcd dense = Eigen::MatrixXcd(u);
  Eigen::MatrixXcd u4 = dense * dense * dense * dense;
  Eigen::MatrixXcd u4_h0(h0.size(), h0.size());
  for (std::size_t a = 0; a < h0.size(); ++a)
    for (std::size_t b = 0; b < h0.size(); ++b)
      u4_h0(a, b) = u4(h0[a], h0[b]);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(u4_h0);
  std::vector<QuadrupletReport> out;
  for (int j = 0; j < u4_h0.rows(); ++j) {
    QuadrupletReport rep;
    rep.epsilon = std::arg(es.eigenvalues()[j]);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
    for (std::size_t a = 0; a < h0.size(); ++a)
      psi[h0[a]] = es.eigenvectors()(a, j);
    psi.normalize();
    for (int m = 0; m < 4; ++m) {
      Eigen::VectorXcd big = z4_extend(u, psi, rep.epsilon, m, geom);
      const Complex ev = std::polar(1.0, (rep.epsilon + 2.0 * kPi * m) / 4.0);
      rep.eigenvalues[m] = ev;
      double nrm = big.norm();
      rep.residuals[m] =
          nrm > 0 ? (u * big - ev * big).norm() / nrm : 0.0;
    }
    out.push_back(rep);
  }
  return out;
}

Eigen::VectorXcd spinor_plane_wave(const lattice::NetworkGeometry& geom, int l,
                                   int sigma, double kx, double ky) {
  if (geom.topology() != Topology::kTorus)
    throw DomainError("spinor basis requires a torus");
  const int lx = geom.lx();
  const int ly = geom.ly();
  l = ((l % 4) + 4) % 4;

  auto h_id = [&](int x, int y) {
    x = ((x % lx) + lx) % lx;
    y = ((y % ly) + ly) % ly;
    return x + lx * y;
  };
  auto v_id = [&](int x, int y) {
    x = ((x % lx) + lx) % lx;
    y = ((y % ly) + ly) % ly;
    return lx * ly + x + lx * y;
  };

  Eigen::VectorXcd vec = Eigen::VectorXcd::Zero(geom.num_links());
  const double norm = 1.0 / std::sqrt(0.25 * lx * ly * 2.0);
  for (int y0 = 0; y0 < ly; y0 += 2)
    for (int x0 = 0; x0 < lx; x0 += 2) {
      LinkId internal, external;
      switch (l) {
        case 0:
          internal = h_id(x0, y0);
          external = h_id(x0 - 1, y0);
          break;
        case 1:
          internal = v_id(x0, y0);
          external = v_id(x0, y0 + 1);
          break;
        case 2:
          internal = h_id(x0, y0 + 1);
          external = h_id(x0 + 1, y0 + 1);
          break;
        default:
          internal = v_id(x0 + 1, y0);
          external = v_id(x0 + 1, y0 - 1);
          break;
      }
      const Complex bloch =
          std::polar(1.0, -(kx * (x0 / 2) + ky * (y0 / 2))) * norm;
      if (sigma > 0) {
        vec[internal] += bloch;
        vec[external] += bloch;
      } else {
        const Complex il = i_power(l);
        vec[internal] += bloch * il;
        vec[external] -= bloch * il;
      }
    }
  return vec;
}

Eigen::Matrix2cd bloch_block(const evolution::ScatteringParams& params, int l,
                             double kx, double ky) {
  if (!params.critical(1e-9))
    throw ParameterError("bloch_block is defined at the critical point");
  const double kappa = kappa_of(l, kx, ky);
  const Complex eik = std::polar(1.0, kappa);
  const Complex c = 0.5 * (1.0 + eik);
  const Complex s = 0.5 * (1.0 - eik);
  Eigen::Matrix2cd u;
  u << c, i_power(l) * s, i_power(-l) * s, c;
  return u;
}

Eigen::Matrix2cd cyclic_product(int l, double kx, double ky) {
  const evolution::ScatteringParams critical{};
  Eigen::Matrix2cd p = Eigen::Matrix2cd::Identity();
  for (int j = 1; j <= 4; ++j) p = bloch_block(critical, l + j, kx, ky) * p;
  return p;
}

Eigen::Matrix2cd measured_block(const lattice::NetworkGeometry& geom,
                                const SparseOp& us, int l, double kx,
                                double ky) {
  // Frame dictionary (see docs/conventions.md): in this lattice's spinor
  // frame the transfer blocks take the reference form of `bloch_block` after
  // reflecting k_x and reversing the orientation of the minus spinor on the
  // source side. Both steps are exact, not approximations.
  const double mkx = -kx;
  Eigen::Matrix2cd out;
  const int sigmas[2] = {+1, -1};
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXcd bra = spinor_plane_wave(geom, l, sigmas[r], mkx, ky);
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXcd ket =
          spinor_plane_wave(geom, l - 1, sigmas[c], mkx, ky);
      out(r, c) = (c == 1 ? -1.0 : 1.0) * bra.dot(us * ket);
    }
  }
  return out;
}

Eigen::MatrixXcd bloch_matrix(const evolution::ScatteringParams& params,
                              double kx, double ky) {
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(8, 8);
  for (int l = 0; l < 4; ++l) {
    const Eigen::Matrix2cd block = bloch_block(params, l + 1, kx, ky);
    const int dst = 2 * ((l + 1) % 4);
    u.block<2, 2>(dst, 2 * l) = block;
  }
  return u;
}

std::vector<Complex> clean_bloch_spectrum(int l) {
  if (l < 4 || l % 2 != 0) throw DimensionError("size must be even, >= 4");
  const evolution::ScatteringParams critical{};
  const int cells = l / 2;
  std::vector<Complex> out;
  out.reserve(8 * static_cast<std::size_t>(cells) * cells);
  for (int my = 0; my < cells; ++my)
    for (int mx = 0; mx < cells; ++mx) {
      const double kx = 2.0 * kPi * mx / cells;
      const double ky = 2.0 * kPi * my / cells;
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(
          bloch_matrix(critical, kx, ky), false);
      for (int j = 0; j < 8; ++j) out.push_back(es.eigenvalues()[j]);
    }
  return out;
}

DispersionReport dirac_check(int l) {
  if (l < 16) throw DimensionError("dirac_check needs L >= 16");
  DispersionReport rep;
  rep.size = l;
  const int cells = l / 2;
  const double dk = 2.0 * kPi / cells;

  auto epsilon4 = [&](double kx, double ky) {
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(cyclic_product(0, kx, ky),
                                                   false);
    double best = kPi;
    for (int j = 0; j < 2; ++j)
      best = std::min(best, std::abs(std::arg(es.eigenvalues()[j])));
    return best;
  };

  for (int my = -1; my <= 1; ++my)
    for (int mx = -1; mx <= 1; ++mx) {
      if (mx == 0 && my == 0) continue;
      DispersionSample s;
      s.kx = dk * mx;
      s.ky = dk * my;
      s.epsilon = epsilon4(s.kx, s.ky);
      s.ratio = s.epsilon / std::hypot(s.kx, s.ky);
      rep.samples.push_back(s);
      rep.max_rel_deviation =
          std::max(rep.max_rel_deviation, std::abs(s.ratio - 1.0));
    }
  rep.axis_ratio = epsilon4(dk, 0.0) / dk;
  rep.isotropy_residual = std::abs(epsilon4(dk, 0.0) - epsilon4(0.0, dk));

  const evolution::ScatteringParams critical{};
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(bloch_matrix(critical, 0, 0),
                                                 false);
  // Eight eigenvalues, the fourth roots of unity twice over; report each once.
  std::array<bool, 4> seen{};
  for (int j = 0; j < 8; ++j) {
    const Complex ev = es.eigenvalues()[j];
    int m = static_cast<int>(std::llround(std::arg(ev) / (kPi / 2)));
    m = ((m % 4) + 4) % 4;
    rep.quadruplet_centers[m] = ev;
    seen[m] = true;
  }
  (void)seen;
  return rep;
}

}  // namespace cc::spectral
