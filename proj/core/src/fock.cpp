#include "cc/fock.hpp"

#include <cmath>
#include <vector>

namespace cc::fock {

namespace {

void require_unitary(const Eigen::MatrixXcd& u) {
  if (u.rows() != u.cols()) throw DomainError("U must be square");
  const double res =
      (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (res > 1e-10) throw DomainError("U is not unitary");
}

// ---- bosonic occupation basis -------------------------------------------

struct BosonSpace {
  int modes;
  int cutoff;  // max occupation per mode
  int dim;
  std::vector<int> stride;

  BosonSpace(int l, int n_max) : modes(l), cutoff(n_max) {
    if (l < 1 || l > 2)
      throw DomainError("boson sector supports 1 or 2 links");
    stride.resize(l);
    dim = 1;
    for (int i = 0; i < l; ++i) {
      stride[i] = dim;
      dim *= n_max + 1;
    }
    if (dim > 40000) throw DomainError("truncated boson space too large");
  }

  int occupation(int state, int mode) const {
    return (state / stride[mode]) % (cutoff + 1);
  }
  int total(int state) const {
    int n = 0;
    for (int i = 0; i < modes; ++i) n += occupation(state, i);
    return n;
  }

  /// Annihilation operator b_mode on the truncated space.
  Eigen::SparseMatrix<double> annihilation(int mode) const {
    std::vector<Eigen::Triplet<double>> trips;
    for (int s = 0; s < dim; ++s) {
      const int n = occupation(s, mode);
      if (n > 0) trips.emplace_back(s - stride[mode], s, std::sqrt(n));
    }
    Eigen::SparseMatrix<double> b(dim, dim);
    b.setFromTriplets(trips.begin(), trips.end());
    return b;
  }
};

Eigen::MatrixXcd exp_anti_hermitian(const Eigen::MatrixXcd& k) {
  // k is anti-Hermitian up to roundoff; exponentiate through iH = k.
  const Eigen::MatrixXcd h = (k - k.adjoint()) * Complex(0, -0.5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i)
    phases[i] = std::polar(1.0, es.eigenvalues()[i]);
  return es.eigenvectors() * phases.asDiagonal() *
         es.eigenvectors().adjoint();
}

Eigen::MatrixXcd boson_sector_exponential(const Eigen::MatrixXcd& x,
                                          int n_max, bool advanced) {
  const int l = static_cast<int>(x.rows());
  BosonSpace space(l, n_max);
  std::vector<Eigen::SparseMatrix<double>> b(l);
  for (int i = 0; i < l; ++i) b[i] = space.annihilation(i);

  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(space.dim, space.dim);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) {
      if (x(i, j) == Complex(0)) continue;
      const Eigen::SparseMatrix<double> op =
          advanced ? Eigen::SparseMatrix<double>(
                         b[i] * Eigen::SparseMatrix<double>(
                                    b[j].transpose()))  // b_i b_j†
                   : Eigen::SparseMatrix<double>(
                         Eigen::SparseMatrix<double>(b[i].transpose()) *
                         b[j]);  // b_i† b_j
      const Complex coeff = (advanced ? -1.0 : 1.0) * x(i, j);
      for (int o = 0; o < op.outerSize(); ++o)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op, o); it; ++it)
          k(it.row(), it.col()) += coeff * it.value();
    }
  return exp_anti_hermitian(k);
}

// ---- fermionic occupation basis ------------------------------------------

struct FermionSpace {
  int modes;
  int dim;

  explicit FermionSpace(int l) : modes(l), dim(1 << l) {}

  int occupation(int state, int mode) const { return (state >> mode) & 1; }
  int total(int state) const { return __builtin_popcount(state); }
  double parity(int state) const { return total(state) % 2 ? -1.0 : 1.0; }

  Eigen::MatrixXd annihilation(int mode) const {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
      if (!occupation(s, mode)) continue;
      int sign = 1;
      for (int j = 0; j < mode; ++j)
        if (occupation(s, j)) sign = -sign;
      f(s ^ (1 << mode), s) = sign;
    }
    return f;
  }
};

Eigen::MatrixXcd fermion_sector_exponential(const Eigen::MatrixXcd& x,
                                            bool advanced) {
  const int l = static_cast<int>(x.rows());
  FermionSpace space(l);
  std::vector<Eigen::MatrixXd> f(l);
  for (int i = 0; i < l; ++i) f[i] = space.annihilation(i);

  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(space.dim, space.dim);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) {
      if (x(i, j) == Complex(0)) continue;
      const Eigen::MatrixXd op =
          advanced ? Eigen::MatrixXd(f[i] * f[j].transpose())   // f_i f_j†
                   : Eigen::MatrixXd(f[i].transpose() * f[j]);  // f_i† f_j
      k += x(i, j) * op.cast<Complex>();
    }
  return exp_anti_hermitian(k);
}

}  // namespace

double truncation_tail(int links, double mu, int n_max) {
  const double w = std::exp(mu * (n_max + 1));
  return links * w / (1.0 - std::exp(mu));
}

BreadResult bread_identity(Complex xi0, Complex xi1, Complex xi2, Complex xi3,
                           int n_max) {
  if (!(xi0.real() < 0.0))
    throw DomainError("bread identity requires Re xi0 < 0 (trace diverges)");
  if (!(xi2.real() > 0.0))
    throw DomainError("bread identity requires Re xi2 > 0 (trace diverges)");

  Complex s_b0 = 0, s_b2 = 0;
  for (int n = 0; n <= n_max; ++n) {
    s_b0 += std::exp(xi0 * static_cast<double>(n));
    s_b2 += std::exp(-xi2 * static_cast<double>(n + 1));
  }
  const Complex s_f1 = 1.0 - std::exp(xi1);
  const Complex s_f3 = std::exp(xi3) - 1.0;

  BreadResult out;
  out.lhs = s_b0 * s_f1 * s_b2 * s_f3;
  out.rhs = (1.0 - std::exp(xi1)) * (1.0 - std::exp(xi3)) /
            ((1.0 - std::exp(xi0)) * (1.0 - std::exp(xi2)));
  out.abs_diff = std::abs(out.lhs - out.rhs);

  const double t0 = std::pow(std::exp(xi0.real()), n_max + 1) /
                    std::abs(1.0 - std::exp(xi0));
  const double t2 = std::pow(std::exp(-xi2.real()), n_max + 1) /
                    std::abs(1.0 - std::exp(-xi2));
  out.tail_bound = (t0 * (std::abs(s_b2) + t2) + t2 * std::abs(s_b0)) *
                   std::abs(s_f1 * s_f3);
  return out;
}

Eigen::MatrixXcd log_unitary(const Eigen::MatrixXcd& u) {
  require_unitary(u);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(u);
  Eigen::VectorXcd logs(es.eigenvalues().size());
  for (int i = 0; i < logs.size(); ++i)
    logs[i] = Complex(0, std::arg(es.eigenvalues()[i]));
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::MatrixXcd x = v * logs.asDiagonal() * v.inverse();
  return 0.5 * (x - x.adjoint().eval());  // project back to anti-Hermitian
}

namespace {

struct Sectors {
  Eigen::MatrixXcd b_plus, b_minus, f_plus, f_minus;  // e^{K} per sector
  BosonSpace bspace;
  FermionSpace fspace;

  Sectors(const Eigen::MatrixXcd& x, int n_max)
      : b_plus(boson_sector_exponential(x, n_max, false)),
        b_minus(boson_sector_exponential(x, n_max, true)),
        f_plus(fermion_sector_exponential(x, false)),
        f_minus(fermion_sector_exponential(x, true)),
        bspace(static_cast<int>(x.rows()), n_max),
        fspace(static_cast<int>(x.rows())) {}

  Complex boson_trace(const Eigen::MatrixXcd& m, double mu) const {
    Complex tr = 0;
    for (int s = 0; s < bspace.dim; ++s)
      tr += std::exp(mu * bspace.total(s)) * m(s, s);
    return tr;
  }
  Complex fermion_trace(const Eigen::MatrixXcd& m, double mu,
                        bool super) const {
    Complex tr = 0;
    for (int s = 0; s < fspace.dim; ++s)
      tr += (super ? fspace.parity(s) : 1.0) *
            std::exp(mu * fspace.total(s)) * m(s, s);
    return tr;
  }
};

}  // namespace

SectorTraces gaussian_supertrace(const Eigen::MatrixXcd& u, double mu,
                                 int n_max, double tail_tol) {
  require_unitary(u);
  if (u.rows() > 2)
    throw DomainError("full supertrace limited to <= 2 links");
  if (!(mu < 0)) throw DomainError("mu must be negative");
  const double tail = truncation_tail(static_cast<int>(u.rows()), mu, n_max);
  if (tail > tail_tol)
    throw TruncationError("truncation tail " + std::to_string(tail) +
                          " above tolerance");

  const Eigen::MatrixXcd x = log_unitary(u);
  const Sectors sec(x, n_max);
  const int n = static_cast<int>(u.rows());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd t = std::exp(mu) * u;

  SectorTraces out;
  out.tail_bound = tail;
  out.boson_retarded = sec.boson_trace(sec.b_plus, mu);
  out.boson_retarded_det = 1.0 / (id - t).determinant();
  out.fermion_retarded_str = sec.fermion_trace(sec.f_plus, mu, true);
  out.fermion_retarded_det = (id - t).determinant();
  out.fermion_retarded_tr = sec.fermion_trace(sec.f_plus, mu, false);
  out.fermion_retarded_tr_det = (id + t).determinant();

  // Advanced sectors: rho involves -b X b† (f X f†), yielding
  // e^{-tr X} det(1 - e^mu e^{-X^T})^{-1} and its fermionic inverse.
  // For unitary U = e^X, e^{-X^T} is just the complex conjugate of U.
  const Eigen::MatrixXcd t_adv = std::exp(mu) * u.conjugate();
  out.boson_advanced = sec.boson_trace(sec.b_minus, mu);
  out.boson_advanced_det =
      std::exp(-x.trace()) / (id - t_adv).determinant();
  out.fermion_advanced_str = sec.fermion_trace(sec.f_minus, mu, true);
  out.fermion_advanced_det = std::exp(x.trace()) * (id - t_adv).determinant();

  out.full_supertrace = out.boson_retarded * out.fermion_retarded_str *
                        out.boson_advanced * out.fermion_advanced_str;
  return out;
}

namespace {

enum class Sector { kBosonRetarded, kFermionRetarded, kBosonAdvanced,
                    kFermionAdvanced };

WickResult wick_impl(const Eigen::MatrixXcd& u, double mu, int l1, int l2,
                     int n_max, Sector which) {
  require_unitary(u);
  if (u.rows() > 2) throw DomainError("wick check limited to <= 2 links");
  if (l1 < 0 || l1 >= u.rows() || l2 < 0 || l2 >= u.rows())
    throw IndexError("link index out of range");
  if (!(mu < 0)) throw DomainError("mu must be negative");

  const Eigen::MatrixXcd x = log_unitary(u);
  const Sectors sec(x, n_max);
  const int n = static_cast<int>(u.rows());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd t = std::exp(mu) * u;

  const Complex tr_bp = sec.boson_trace(sec.b_plus, mu);
  const Complex tr_bm = sec.boson_trace(sec.b_minus, mu);
  const Complex str_fp = sec.fermion_trace(sec.f_plus, mu, true);
  const Complex str_fm = sec.fermion_trace(sec.f_minus, mu, true);

  WickResult out;
  if (which == Sector::kBosonRetarded || which == Sector::kBosonAdvanced) {
    const bool adv = which == Sector::kBosonAdvanced;
    std::vector<Eigen::SparseMatrix<double>> b(n);
    for (int i = 0; i < n; ++i) b[i] = sec.bspace.annihilation(i);
    // retarded: b†(l1) b(l2); advanced: b(l1) b†(l2)
    const Eigen::MatrixXd ins =
        adv ? Eigen::MatrixXd(b[l1] *
                              Eigen::SparseMatrix<double>(b[l2].transpose()))
            : Eigen::MatrixXd(
                  Eigen::SparseMatrix<double>(b[l1].transpose()) * b[l2]);
    const Eigen::MatrixXcd& m = adv ? sec.b_minus : sec.b_plus;
    Complex tr = 0;
    for (int s = 0; s < sec.bspace.dim; ++s) {
      Complex row = 0;
      for (int s2 = 0; s2 < sec.bspace.dim; ++s2)
        row += m(s, s2) * ins(s2, s);
      tr += std::exp(mu * sec.bspace.total(s)) * row;
    }
    out.fock_value =
        tr * (adv ? tr_bp * str_fp * str_fm : tr_bm * str_fp * str_fm);
    out.matrix_value =
        adv ? Complex((id - t.adjoint().eval()).inverse()(l2, l1))
            : Complex((t * (id - t).inverse())(l2, l1));
  } else {
    const bool adv = which == Sector::kFermionAdvanced;
    FermionSpace fs(n);
    std::vector<Eigen::MatrixXd> f(n);
    for (int i = 0; i < n; ++i) f[i] = fs.annihilation(i);
    const Eigen::MatrixXd ins =
        adv ? Eigen::MatrixXd(f[l1] * f[l2].transpose())
            : Eigen::MatrixXd(f[l1].transpose() * f[l2]);
    const Eigen::MatrixXcd& m = adv ? sec.f_minus : sec.f_plus;
    Complex tr = 0;
    for (int s = 0; s < fs.dim; ++s) {
      Complex row = 0;
      for (int s2 = 0; s2 < fs.dim; ++s2) row += m(s, s2) * ins(s2, s);
      tr += fs.parity(s) * std::exp(mu * fs.total(s)) * row;
    }
    out.fock_value =
        tr * (adv ? tr_bp * tr_bm * str_fp : tr_bp * tr_bm * str_fm);
    out.matrix_value =
        adv ? Complex((id - t.adjoint().eval()).inverse()(l2, l1))
            : -Complex((t * (id - t).inverse())(l2, l1));
  }
  out.abs_diff = std::abs(out.fock_value - out.matrix_value);
  return out;
}

}  // namespace

WickResult wick_boson_retarded(const Eigen::MatrixXcd& u, double mu, int l1,
                               int l2, int n_max) {
  return wick_impl(u, mu, l1, l2, n_max, Sector::kBosonRetarded);
}
WickResult wick_fermion_retarded(const Eigen::MatrixXcd& u, double mu, int l1,
                                 int l2, int n_max) {
  return wick_impl(u, mu, l1, l2, n_max, Sector::kFermionRetarded);
}
WickResult wick_boson_advanced(const Eigen::MatrixXcd& u, double mu, int l1,
                               int l2, int n_max) {
  return wick_impl(u, mu, l1, l2, n_max, Sector::kBosonAdvanced);
}
WickResult wick_fermion_advanced(const Eigen::MatrixXcd& u, double mu, int l1,
                                 int l2, int n_max) {
  return wick_impl(u, mu, l1, l2, n_max, Sector::kFermionAdvanced);
}

Eigen::MatrixXcd boson_retarded_rho(const Eigen::MatrixXcd& u, int n_max) {
  return boson_sector_exponential(log_unitary(u), n_max, false);
}

Eigen::MatrixXcd fermion_retarded_rho(const Eigen::MatrixXcd& u) {
  return fermion_sector_exponential(log_unitary(u), false);
}

}  // namespace cc::fock
