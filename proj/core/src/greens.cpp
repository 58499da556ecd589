#include "cc/greens.hpp"

#include <string>

namespace cc::greens {

namespace {

SparseOp identity_minus(const SparseOp& t) {
  SparseOp id(t.rows(), t.cols());
  id.setIdentity();
  SparseOp m = id - t;
  m.makeCompressed();
  return m;
}

}  // namespace

GreenFactorization::GreenFactorization(const SparseOp& t)
    : one_minus_t_(identity_minus(t)) {
  lu_.compute(one_minus_t_);
  if (lu_.info() != Eigen::Success)
    throw SingularityError(
        "(1 - T) is singular; the evolution operator has a unit eigenvalue "
        "(missing regularization?)");
}

Eigen::VectorXcd GreenFactorization::solve(const Eigen::VectorXcd& b) {
  Eigen::VectorXcd x = lu_.solve(b);
  if (lu_.info() != Eigen::Success)
    throw SingularityError("solve with (1 - T) failed");
  return x;
}

Eigen::VectorXcd GreenFactorization::solve_adjoint(
    const Eigen::VectorXcd& b) {
  Eigen::VectorXcd x = lu_.adjoint().solve(b);
  return x;
}

const Eigen::VectorXcd& GreenFactorization::column(LinkId source) {
  auto it = columns_.find(source);
  if (it != columns_.end()) return it->second;
  if (source < 0 || source >= size())
    throw IndexError("source link " + std::to_string(source) +
                     " out of range");
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(size());
  b[source] = 1.0;
  auto [ins, ok] = columns_.emplace(source, solve(b));
  (void)ok;
  return ins->second;
}

Complex GreenFactorization::green(LinkId from, LinkId to) {
  if (to < 0 || to >= size())
    throw IndexError("target link " + std::to_string(to) + " out of range");
  return column(from)[to];
}

Complex GreenFactorization::diagonal_t_green(LinkId l) {
  return green(l, l) - 1.0;
}

double GreenFactorization::solve_residual(const Eigen::VectorXcd& x,
                                          const Eigen::VectorXcd& b) const {
  return (one_minus_t_ * x - b).norm() / std::max(b.norm(), 1e-300);
}

PairCorrelators sigma_upsilon(
    GreenFactorization& fact,
    const std::vector<std::pair<LinkId, LinkId>>& pairs) {
  PairCorrelators out;
  out.pairs = pairs;
  out.sigma.reserve(pairs.size());
  out.upsilon.reserve(pairs.size());
  for (auto [l1, l2] : pairs) {
    out.sigma.push_back(std::norm(fact.green(l2, l1)));
    out.upsilon.push_back(fact.diagonal_t_green(l1) *
                          std::conj(fact.diagonal_t_green(l2)));
  }
  return out;
}

Eigen::VectorXcd point_contact_state(const SparseOp& u, LinkId contact) {
  const int n = static_cast<int>(u.rows());
  if (contact < 0 || contact >= n)
    throw IndexError("contact link out of range");

  // U Q is U with the contact column removed.
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(u.nonZeros() + n);
  for (int j = 0; j < n; ++j) trips.emplace_back(j, j, Complex(1.0, 0.0));
  for (int k = 0; k < u.outerSize(); ++k)
    for (SparseOp::InnerIterator it(u, k); it; ++it) {
      if (it.col() == contact) continue;
      trips.emplace_back(static_cast<int>(it.row()),
                         static_cast<int>(it.col()), -it.value());
    }
  SparseOp m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();

  Eigen::SparseLU<SparseOp> lu(m);
  if (lu.info() != Eigen::Success)
    throw SingularityError(
        "1 - UQ is singular (resonance at the contact); perturb the seed");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  for (SparseOp::InnerIterator it(u, contact); it; ++it)
    rhs[it.row()] = it.value();
  Eigen::VectorXcd psi = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw SingularityError("point-contact solve failed; perturb the seed");
  return psi;
}

}  // namespace cc::greens
