#include "cc/evolution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cc/lattice.hpp"
#include "doctest.h"

using namespace cc;
using namespace cc::lattice;
using namespace cc::evolution;

namespace {

double unitarity_residual(const SparseOp& u) {
  const Eigen::MatrixXcd d(u);
  return (d.adjoint() * d -
          Eigen::MatrixXcd::Identity(d.rows(), d.cols()))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace

TEST_CASE("node amplitudes are unitary for every beta") {
  for (double beta : {kPi / 4, kPi / 8, 1.1}) {
    const ScatteringParams p{beta};
    CHECK(std::abs(std::norm(p.a_plus()) + std::norm(p.a_minus()) - 1.0) <
          1e-14);
    const Complex cross = p.a_plus() * std::conj(p.a_minus()) +
                          p.a_minus() * std::conj(p.a_plus());
    CHECK(std::abs(cross) < 1e-14);
  }
}

TEST_CASE("U_s is unitary on the torus") {
  for (int l : {4, 6, 8}) {
    const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
    const auto us = build_us(g, ScatteringParams{});
    CHECK(unitarity_residual(us) < 1e-12);
    const auto us_off = build_us(g, ScatteringParams{0.9});
    CHECK(unitarity_residual(us_off) < 1e-12);
  }
}

TEST_CASE("beta -> pi/2 limit is a signed permutation") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{kPi / 2});
  for (int k = 0; k < us.outerSize(); ++k) {
    int nnz = 0;
    for (SparseOp::InnerIterator it(us, k); it; ++it) {
      if (std::abs(it.value()) < 1e-15) continue;
      ++nnz;
      CHECK(std::abs(std::abs(it.value()) - 1.0) < 1e-12);
      CHECK(it.row() == g.right_successor(static_cast<LinkId>(k)));
    }
    CHECK(nnz == 1);
  }
}

TEST_CASE("nonzero pattern connects class l to l+1 only") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  for (int k = 0; k < us.outerSize(); ++k)
    for (SparseOp::InnerIterator it(us, k); it; ++it)
      CHECK(g.link(static_cast<LinkId>(it.row())).cls ==
            (g.link(static_cast<LinkId>(k)).cls + 1) % 4);
}

TEST_CASE("U_s commutes with the pi/2 rotation permutation") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const Complex center(0.5, 0.5);
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(g.num_links(), g.num_links());
  for (const auto& l : g.links()) p(g.rotated_link(l.id, center), l.id) = 1.0;
  const Eigen::MatrixXcd d(us);
  CHECK((p.adjoint() * d * p - d).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("disorder sampling is deterministic and uniform") {
  const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
  const auto d1 = sample_disorder(g, 42, 7);
  const auto d2 = sample_disorder(g, 42, 7);
  CHECK(d1.phases == d2.phases);

  const auto d3 = sample_disorder(g, 42, 8);
  double corr = 0;
  for (std::size_t i = 0; i < d1.phases.size(); ++i)
    corr += std::cos(d1.phases[i] - d3.phases[i]);
  corr /= d1.phases.size();
  CHECK(std::abs(corr) < 3.0 / std::sqrt(double(g.num_links())));

  // Kolmogorov-Smirnov test for uniformity on [0, 2 pi), 1e5 draws.
  std::vector<double> draws;
  const auto big = NetworkGeometry::build(100, 100, Topology::kTorus);
  for (int idx = 0; idx < 5; ++idx) {
    const auto d = sample_disorder(big, 99, idx);
    draws.insert(draws.end(), d.phases.begin(), d.phases.end());
  }
  std::sort(draws.begin(), draws.end());
  double ks = 0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = draws[i] / (2 * kPi);
    ks = std::max(ks, std::abs(f - (i + 1) / n));
    ks = std::max(ks, std::abs(f - i / n));
  }
  // 1% critical value of the KS statistic.
  CHECK(ks < 1.63 / std::sqrt(n));
}

TEST_CASE("disordered U stays unitary") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto u = compose_u(us, sample_disorder(g, 3, 0));
  CHECK(unitarity_residual(u) < 1e-12);
}

TEST_CASE("compose_t limits and errors") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto dis = sample_disorder(g, 5, 1);

  CHECK_THROWS_AS(Regularization::absorbing(0.1), ParameterError);
  CHECK_THROWS_AS(Regularization::point_contacts({}), ParameterError);
  CHECK_THROWS_AS(
      compose_t(us, dis, Regularization::point_contacts({9999})), IndexError);

  // e^mu = 0 analog: a hugely negative mu wipes the operator out.
  const auto t0 = compose_t(us, dis, Regularization::absorbing(-900.0));
  CHECK(Eigen::MatrixXcd(t0).cwiseAbs().maxCoeff() < 1e-300);

  // Point contacts zero exactly the contact rows of T = QU.
  const std::vector<LinkId> contacts{3, 17};
  const auto tq = compose_t(us, dis, Regularization::point_contacts(contacts));
  const Eigen::MatrixXcd dt(tq);
  const auto tu = Eigen::MatrixXcd(compose_u(us, dis));
  for (int r = 0; r < dt.rows(); ++r) {
    const bool is_contact =
        std::find(contacts.begin(), contacts.end(), r) != contacts.end();
    if (is_contact)
      CHECK(dt.row(r).cwiseAbs().maxCoeff() == 0.0);
    else
      CHECK((dt.row(r) - tu.row(r)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("spectral radius below one under absorption") {
  const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto t =
      compose_t(us, sample_disorder(g, 11, 0), Regularization::absorbing(-0.01));

  // Power iteration on T^dagger T.
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(g.num_links());
  v.normalize();
  double norm_est = 0;
  for (int it = 0; it < 200; ++it) {
    v = (t.adjoint() * (t * v)).eval();
    norm_est = std::sqrt(v.norm());
    v.normalize();
  }
  CHECK(norm_est < 1.0);
  CHECK(norm_est > 0.9);

  // || T^n v || decays geometrically.
  Eigen::VectorXcd w = Eigen::VectorXcd::Random(g.num_links());
  const double n0 = w.norm();
  for (int it = 0; it < 600; ++it) w = (t * w).eval();
  CHECK(w.norm() < n0 * std::exp(-0.01 * 600) * 10.0);
}
