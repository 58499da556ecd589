#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "cc/types.hpp"

namespace cc::greens {

// Reusable factorization of (1 - T) for one disorder realization. Solves for
// many right-hand sides, and with (1 - T^dagger) through the adjoint of the
// same factors. Not thread-safe across workers; each realization owns one.
class GreenFactorization {
 public:
  explicit GreenFactorization(const SparseOp& t);

  int size() const { return static_cast<int>(one_minus_t_.rows()); }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b);
  Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& b);

  /// (1-T)^{-1} e_source, cached per source column.
  const Eigen::VectorXcd& column(LinkId source);

  /// <to | (1-T)^{-1} | from>
  Complex green(LinkId from, LinkId to);

  /// <l | T (1-T)^{-1} | l> = <l | (1-T)^{-1} | l> - 1
  Complex diagonal_t_green(LinkId l);

  double solve_residual(const Eigen::VectorXcd& x,
                        const Eigen::VectorXcd& b) const;

 private:
  SparseOp one_minus_t_;
  Eigen::SparseLU<SparseOp> lu_;
  std::unordered_map<LinkId, Eigen::VectorXcd> columns_;
};

struct PairCorrelators {
  std::vector<std::pair<LinkId, LinkId>> pairs;
  std::vector<double> sigma;     // |<l1|(1-T)^{-1}|l2>|^2
  std::vector<Complex> upsilon;  // <l1|T(1-T)^{-1}|l1> <l2|T†(1-T†)^{-1}|l2>
};

/// Single-realization sigma and upsilon on the requested link pairs.
PairCorrelators sigma_upsilon(GreenFactorization& fact,
                              const std::vector<std::pair<LinkId, LinkId>>& pairs);

// Stationary state with incoming-wave boundary conditions at a point
// contact: psi = (1 - U Q)^{-1} U |l_c>, Q = 1 - |l_c><l_c|, so that
// psi = U (Q psi + |l_c>) with unit amplitude re-injected at the contact.
Eigen::VectorXcd point_contact_state(const SparseOp& u, LinkId contact);

}  // namespace cc::greens
