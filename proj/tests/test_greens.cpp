#include "cc/greens.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "cc/evolution.hpp"
#include "cc/lattice.hpp"
#include "cc/rng.hpp"
#include "doctest.h"

using namespace cc;
using namespace cc::lattice;
using namespace cc::evolution;
using namespace cc::greens;

namespace {

SparseOp zero_op(int n) {
  SparseOp t(n, n);
  t.setZero();
  return t;
}

}  // namespace

TEST_CASE("T = 0 solves are the identity") {
  GreenFactorization fact(zero_op(16));
  Eigen::VectorXcd b = Eigen::VectorXcd::Random(16);
  CHECK((fact.solve(b) - b).norm() < 1e-14);
  CHECK(std::abs(fact.green(5, 5) - 1.0) < 1e-14);
  CHECK(std::abs(fact.green(5, 7)) < 1e-14);
}

TEST_CASE("random sub-unitary solve residual") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto t = compose_t(us, sample_disorder(g, 21, 0),
                           Regularization::absorbing(-0.05));
  GreenFactorization fact(t);
  Eigen::VectorXcd b = Eigen::VectorXcd::Random(g.num_links());
  Eigen::VectorXcd x = fact.solve(b);
  CHECK(fact.solve_residual(x, b) < 1e-10);

  Eigen::VectorXcd y = fact.solve_adjoint(b);
  SparseOp id(g.num_links(), g.num_links());
  id.setIdentity();
  CHECK(((id - SparseOp(t.adjoint())) * y - b).norm() / b.norm() < 1e-10);
}

TEST_CASE("solve agrees with the truncated Neumann series") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const double mu = std::log(0.5);  // e^mu = 0.5
  const auto t = compose_t(us, sample_disorder(g, 33, 2),
                           Regularization::absorbing(mu));
  GreenFactorization fact(t);

  Eigen::VectorXcd b = Eigen::VectorXcd::Random(g.num_links());
  const int terms = 40;
  Eigen::VectorXcd series = b;
  Eigen::VectorXcd power = b;
  for (int n = 1; n <= terms; ++n) {
    power = (t * power).eval();
    series += power;
  }
  const double tail = std::pow(0.5, terms + 1) / (1 - 0.5) * b.norm();
  CHECK((fact.solve(b) - series).norm() <= tail + 1e-12);
}

TEST_CASE("singular 1 - T is rejected") {
  SparseOp t(8, 8);
  t.setIdentity();  // 1 - T = 0
  CHECK_THROWS_AS(GreenFactorization{t}, SingularityError);
}

TEST_CASE("column sums shrink with stronger absorption") {
  const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto dis = sample_disorder(g, 9, 4);
  double previous = 1e300;
  for (double mu : {-0.02, -0.1, -0.4}) {
    GreenFactorization fact(
        compose_t(us, dis, Regularization::absorbing(mu)));
    const double total = fact.column(0).squaredNorm();
    CHECK(total < previous);
    CHECK(std::isfinite(total));
    previous = total;
  }
}

TEST_CASE("sigma and upsilon at T = 0") {
  GreenFactorization fact(zero_op(12));
  auto pc = sigma_upsilon(fact, {{3, 3}, {3, 5}, {7, 2}});
  CHECK(pc.sigma[0] == doctest::Approx(1.0));
  CHECK(pc.sigma[1] == doctest::Approx(0.0));
  CHECK(pc.sigma[2] == doctest::Approx(0.0));
  for (Complex u : pc.upsilon) CHECK(std::abs(u) < 1e-14);
}

TEST_CASE("Kirchhoff double rule with point contacts") {
  const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto dis = sample_disorder(g, 77, 0);
  const LinkId contact = 0;  // midpoint (0.5, 0)
  const auto t = compose_t(us, dis, Regularization::point_contacts({contact}));
  GreenFactorization fact(t);

  const LinkId source = g.node_at(4, 4);  // a horizontal link far away
  const Eigen::VectorXcd& col = fact.column(source);  // sigma(., source)
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(g.num_links());
  e[source] = 1.0;
  const Eigen::VectorXcd row = fact.solve_adjoint(e);  // sigma(source, .)*

  const Complex c_mid = g.link_midpoint(contact);
  const Complex s_mid = g.link_midpoint(source);
  int tested = 0;
  for (const auto& n : g.nodes()) {
    const Complex pos(n.x, n.y);
    if (std::abs(g.displacement(pos, c_mid)) < 3.0) continue;
    if (std::abs(g.displacement(pos, s_mid)) < 2.0) continue;
    double in1 = 0, out1 = 0, in2 = 0, out2 = 0;
    for (LinkId l : n.west_east_north_south) {
      const bool incoming = g.link(l).head == n.id;
      (incoming ? in1 : out1) += std::norm(col[l]);
      (incoming ? in2 : out2) += std::norm(row[l]);
    }
    CHECK(std::abs(in1 - out1) < 1e-10);  // rule in the first argument
    CHECK(std::abs(in2 - out2) < 1e-10);  // rule in the second argument
    ++tested;
  }
  CHECK(tested > 10);
}

TEST_CASE("point-contact state: stationarity and nodal rule") {
  const auto g = NetworkGeometry::build(8, 8, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto u = compose_u(us, sample_disorder(g, 5, 9));
  const LinkId contact = 3;
  const Eigen::VectorXcd psi = point_contact_state(u, contact);

  Eigen::VectorXcd q_psi = psi;
  q_psi[contact] = 1.0;  // Q psi + |contact>
  CHECK((psi - u * q_psi).norm() < 1e-10);

  const NodeId fed = g.link(contact).head;
  for (const auto& n : g.nodes()) {
    if (n.id == fed) continue;
    double in = 0, out = 0;
    for (LinkId l : n.west_east_north_south)
      (g.link(l).head == n.id ? in : out) += std::norm(psi[l]);
    CHECK(std::abs(in - out) < 1e-10);
  }
}

TEST_CASE("mono-type collapse onto the identity (small sample)") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto reg = Regularization::absorbing(default_mu(6));
  const LinkId from = 0;
  const LinkId near = g.left_successor(from);
  const LinkId far = 3 + 6 * 3;

  const int samples = 1500;
  Complex sum_self = 0, sum_near = 0, sum_far = 0, sum_p2 = 0;
  double sq_self = 0, sq_near = 0, sq_far = 0, sq_p2 = 0;
  for (int i = 0; i < samples; ++i) {
    GreenFactorization fact(compose_t(us, sample_disorder(g, 4242, i), reg));
    const Eigen::VectorXcd& col = fact.column(from);
    auto acc = [&](Complex v, Complex& s, double& sq) {
      s += v;
      sq += std::norm(v);
    };
    acc(col[from], sum_self, sq_self);
    acc(col[near], sum_near, sq_near);
    acc(col[far], sum_far, sq_far);
    acc(col[near] * col[far], sum_p2, sq_p2);
  }
  auto check_against = [&](Complex sum, double sq, double expected) {
    const Complex mean = sum / double(samples);
    const double var = std::max(sq / samples - std::norm(mean), 0.0);
    const double se = std::sqrt(var / samples) + 1e-12;
    CHECK(std::abs(mean - expected) < 4 * se * std::sqrt(2.0));
  };
  check_against(sum_self, sq_self, 1.0);
  check_against(sum_near, sq_near, 0.0);
  check_against(sum_far, sq_far, 0.0);
  check_against(sum_p2, sq_p2, 0.0);
}
