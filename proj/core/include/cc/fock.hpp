#pragma once

#include <Eigen/Dense>

#include "cc/types.hpp"

namespace cc::fock {

// Truncated-Fock verification of the supersymmetric second quantization.
// The Fock space over L links factors into four independent sectors
// (retarded/advanced x boson/fermion); bosons are truncated at occupation
// n_max per mode, fermions are exact. All traces below are brute-force sums
// over the truncated occupation basis; the determinant formulas they are
// compared against come from the untruncated theory.

struct BreadResult {
  Complex lhs;  // truncated supertrace
  Complex rhs;  // (1-e^{xi1})(1-e^{xi3}) / ((1-e^{xi0})(1-e^{xi2}))
  double abs_diff = 0.0;
  double tail_bound = 0.0;
};

/// Scalar supertrace identity; requires Re xi0 < 0 < Re xi2.
BreadResult bread_identity(Complex xi0, Complex xi1, Complex xi2, Complex xi3,
                           int n_max);

/// Principal-branch logarithm of a unitary matrix (eigenphases in (-pi, pi]).
Eigen::MatrixXcd log_unitary(const Eigen::MatrixXcd& u);

struct SectorTraces {
  Complex boson_retarded;        // Tr_{b+} e^{mu n} rho(U)
  Complex boson_retarded_det;    // det(1 - e^mu U)^{-1}
  Complex fermion_retarded_str;  // STr_{f+} e^{mu n} rho(U)
  Complex fermion_retarded_det;  // det(1 - e^mu U)
  Complex fermion_retarded_tr;       // plain trace variant
  Complex fermion_retarded_tr_det;   // det(1 + e^mu U)
  Complex boson_advanced;
  Complex boson_advanced_det;
  Complex fermion_advanced_str;
  Complex fermion_advanced_det;
  Complex full_supertrace;  // product over sectors; equals 1
  double tail_bound = 0.0;
};

/// Sector-by-sector truncated traces of e^{mu N} rho(U) for a unitary U on
/// at most 2 links, against their determinant identities.
SectorTraces gaussian_supertrace(const Eigen::MatrixXcd& u, double mu,
                                 int n_max, double tail_tol = 1e-6);

struct WickResult {
  Complex fock_value;
  Complex matrix_value;
  double abs_diff = 0.0;
};

// The two basic Wick contractions and their fermionic partners, T = e^mu U:
//   <b+†(l1) b+(l2)> = <l2| T(1-T)^{-1} |l1> = -<f+†(l1) f+(l2)>
//   <b-(l1) b-†(l2)> = <l2| (1-T†)^{-1} |l1> = +<f-(l1) f-†(l2)>
WickResult wick_boson_retarded(const Eigen::MatrixXcd& u, double mu, int l1,
                               int l2, int n_max);
WickResult wick_fermion_retarded(const Eigen::MatrixXcd& u, double mu, int l1,
                                 int l2, int n_max);
WickResult wick_boson_advanced(const Eigen::MatrixXcd& u, double mu, int l1,
                               int l2, int n_max);
WickResult wick_fermion_advanced(const Eigen::MatrixXcd& u, double mu, int l1,
                                 int l2, int n_max);

// Truncated sector representations of rho(U), for the multiplicativity
// check rho(U_r U_s) = rho(U_r) rho(U_s).
Eigen::MatrixXcd boson_retarded_rho(const Eigen::MatrixXcd& u, int n_max);
Eigen::MatrixXcd fermion_retarded_rho(const Eigen::MatrixXcd& u);

/// Geometric per-mode bound on the weight of the truncated states.
double truncation_tail(int links, double mu, int n_max);

}  // namespace cc::fock
