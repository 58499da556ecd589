#include "cc/evolution.hpp"

#include <cmath>
#include <string>

#include "cc/rng.hpp"

namespace cc::evolution {

Complex ScatteringParams::a_plus() const {
  return std::polar(std::cos(beta), kPi / 4);
}

Complex ScatteringParams::a_minus() const {
  return std::polar(std::sin(beta), -kPi / 4);
}

bool ScatteringParams::critical(double tol) const {
  return std::abs(beta - kPi / 4) < tol;
}

Regularization Regularization::absorbing(double mu) {
  if (!(mu < 0.0))
    throw ParameterError("absorbing background requires mu < 0, got " +
                         std::to_string(mu));
  Regularization r;
  r.kind = Kind::kAbsorbingBackground;
  r.mu = mu;
  return r;
}

Regularization Regularization::point_contacts(std::vector<LinkId> contacts) {
  if (contacts.empty())
    throw ParameterError("point-contact regularization needs >= 1 contact");
  Regularization r;
  r.kind = Kind::kPointContacts;
  r.contacts = std::move(contacts);
  return r;
}

double default_mu(int l) { return -1.0 / (2.0 * l); }

SparseOp build_us(const lattice::NetworkGeometry& geom,
                  const ScatteringParams& params, TurnConvention convention) {
  const int n = geom.num_links();
  Complex ap = params.a_plus();
  Complex am = params.a_minus();
  if (convention == TurnConvention::kSwapLeftRight) std::swap(ap, am);

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(2 * static_cast<std::size_t>(n));
  for (LinkId l = 0; l < n; ++l) {
    auto [left, right] = geom.successors(l);
    if (left != kNoLink) trips.emplace_back(left, l, ap);
    if (right != kNoLink) trips.emplace_back(right, l, am);
  }
  SparseOp us(n, n);
  us.setFromTriplets(trips.begin(), trips.end());
  us.makeCompressed();
  return us;
}

DisorderRealization sample_disorder(const lattice::NetworkGeometry& geom,
                                    std::uint64_t master_seed,
                                    std::uint64_t index) {
  DisorderRealization d;
  d.master_seed = master_seed;
  d.index = index;
  d.phases.resize(geom.num_links());
  for (LinkId l = 0; l < geom.num_links(); ++l)
    d.phases[l] = 2.0 * kPi * rng::uniform(master_seed, index, l);
  return d;
}

SparseOp compose_u(const SparseOp& us, const DisorderRealization& disorder) {
  SparseOp u = us;
  for (int k = 0; k < u.outerSize(); ++k)
    for (SparseOp::InnerIterator it(u, k); it; ++it)
      it.valueRef() *= std::polar(1.0, disorder.phases[it.row()]);
  return u;
}

SparseOp compose_t(const SparseOp& us, const DisorderRealization& disorder,
                   const Regularization& reg) {
  const int n = static_cast<int>(us.rows());
  std::vector<char> contact(n, 0);
  double damp = 1.0;
  if (reg.kind == Regularization::Kind::kAbsorbingBackground) {
    if (!(reg.mu < 0.0)) throw ParameterError("mu must be < 0");
    damp = std::exp(reg.mu);
  } else if (reg.kind == Regularization::Kind::kPointContacts) {
    for (LinkId c : reg.contacts) {
      if (c < 0 || c >= n)
        throw IndexError("contact link " + std::to_string(c) +
                         " out of range");
      contact[c] = 1;
    }
  }

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(us.nonZeros());
  for (int k = 0; k < us.outerSize(); ++k)
    for (SparseOp::InnerIterator it(us, k); it; ++it) {
      if (contact[it.row()]) continue;  // Q projects out the contact rows
      trips.emplace_back(
          static_cast<int>(it.row()), static_cast<int>(it.col()),
          it.value() * damp * std::polar(1.0, disorder.phases[it.row()]));
    }
  SparseOp t(n, n);
  t.setFromTriplets(trips.begin(), trips.end());
  t.makeCompressed();
  return t;
}

}  // namespace cc::evolution
