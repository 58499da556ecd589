#include "cc/fock.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cc/rng.hpp"
#include "cc/types.hpp"
#include "doctest.h"

using namespace cc;
using namespace cc::fock;

namespace {

Eigen::MatrixXcd random_u2(std::uint64_t seed) {
  const double a = 2 * kPi * rng::uniform(seed, 0, 0);
  const double b = 2 * kPi * rng::uniform(seed, 0, 1);
  const double c = 2 * kPi * rng::uniform(seed, 0, 2);
  const double th = 0.5 * kPi * rng::uniform(seed, 0, 3);
  Eigen::MatrixXcd u(2, 2);
  u << std::polar(std::cos(th), a), std::polar(std::sin(th), b),
      -std::polar(std::sin(th), c),
      std::polar(std::cos(th), b + c - a);
  return u;
}

}  // namespace

TEST_CASE("scalar supertrace identity: cancellations") {
  // xi0 = xi1 = -1, xi2 = xi3 = 1: numerator cancels denominator.
  auto r = bread_identity({-1, 0}, {-1, 0}, {1, 0}, {1, 0}, 50);
  CHECK(std::abs(r.rhs - 1.0) < 1e-14);
  CHECK(r.abs_diff <= r.tail_bound + 1e-14);

  // xi1 = 0 kills the right-hand side.
  auto r0 = bread_identity({-0.5, 0}, {0, 0}, {0.8, 0}, {0.3, 0.2}, 50);
  CHECK(std::abs(r0.rhs) < 1e-14);
  CHECK(std::abs(r0.lhs) < 1e-14);
}

TEST_CASE("scalar supertrace identity at a generic complex point") {
  const auto r = bread_identity({-0.7, 0.3}, {-0.2, 1.1}, {0.5, -0.4},
                                {0.9, 0.2}, 60);
  CHECK(r.abs_diff < 1e-10);
  CHECK(r.abs_diff <= r.tail_bound + 1e-12);
}

TEST_CASE("scalar supertrace identity rejects divergent traces") {
  CHECK_THROWS_AS(bread_identity({0.1, 0}, {0, 0}, {1, 0}, {0, 0}, 10),
                  DomainError);
  CHECK_THROWS_AS(bread_identity({-1, 0}, {0, 0}, {-0.2, 0}, {0, 0}, 10),
                  DomainError);
}

TEST_CASE("halving the truncation tail geometrically") {
  const Complex xi0{-0.25, 0.4}, xi1{0.3, -0.2}, xi2{0.3, 0.9}, xi3{-0.1, 0.5};
  const auto coarse = bread_identity(xi0, xi1, xi2, xi3, 10);
  const auto fine = bread_identity(xi0, xi1, xi2, xi3, 20);
  CHECK(coarse.abs_diff > 1e-13);  // visible truncation error at N = 10
  // Doubling N_max shrinks the error at least by the geometric factor of the
  // slowest mode, e^{-0.25 * 10}.
  CHECK(fine.abs_diff <= coarse.abs_diff * std::exp(-0.25 * 10) * 10.0);
}

TEST_CASE("single-mode boson trace equals (1 - e^{mu + i phi})^{-1}") {
  const double phi = 1.234;
  Eigen::MatrixXcd u(1, 1);
  u(0, 0) = std::polar(1.0, phi);
  const auto st = gaussian_supertrace(u, -0.8, 40);
  const Complex expected = 1.0 / (1.0 - std::polar(std::exp(-0.8), phi));
  CHECK(std::abs(st.boson_retarded - expected) < 1e-10);
  CHECK(std::abs(st.boson_retarded_det - expected) < 1e-14);
  CHECK(std::abs(st.full_supertrace - 1.0) < 1e-10);
}

TEST_CASE("two-link sector traces match their determinant identities") {
  const Eigen::MatrixXcd u = random_u2(314);
  const double mu = -1.0;
  const int n_max = 28;
  const auto st = gaussian_supertrace(u, mu, n_max);
  CHECK(std::abs(st.boson_retarded - st.boson_retarded_det) < 1e-8);
  CHECK(std::abs(st.fermion_retarded_str - st.fermion_retarded_det) < 1e-12);
  CHECK(std::abs(st.fermion_retarded_tr - st.fermion_retarded_tr_det) <
        1e-12);
  CHECK(std::abs(st.boson_advanced - st.boson_advanced_det) < 1e-8);
  CHECK(std::abs(st.fermion_advanced_str - st.fermion_advanced_det) < 1e-12);
  CHECK(std::abs(st.full_supertrace - 1.0) < 1e-8);
}

TEST_CASE("supertrace guards") {
  Eigen::MatrixXcd bad(2, 2);
  bad << 1, 1, 0, 1;
  CHECK_THROWS_AS(gaussian_supertrace(bad, -1.0, 10), DomainError);
  const Eigen::MatrixXcd u = random_u2(3);
  CHECK_THROWS_AS(gaussian_supertrace(u, -0.001, 10), TruncationError);
}

TEST_CASE("wick contractions against the matrix side") {
  const Eigen::MatrixXcd u = random_u2(2718);
  const double mu = -1.0;
  const int n_max = 28;
  for (int l1 = 0; l1 < 2; ++l1)
    for (int l2 = 0; l2 < 2; ++l2) {
      const auto br = wick_boson_retarded(u, mu, l1, l2, n_max);
      CHECK(br.abs_diff < 1e-8);
      const auto fr = wick_fermion_retarded(u, mu, l1, l2, n_max);
      CHECK(fr.abs_diff < 1e-8);
      // Fermion contraction is minus the boson one.
      CHECK(std::abs(fr.fock_value + br.fock_value) < 1e-8);
      const auto ba = wick_boson_advanced(u, mu, l1, l2, n_max);
      CHECK(ba.abs_diff < 1e-8);
      const auto fa = wick_fermion_advanced(u, mu, l1, l2, n_max);
      CHECK(fa.abs_diff < 1e-8);
      CHECK(std::abs(fa.fock_value - ba.fock_value) < 1e-8);
    }
}

TEST_CASE("wick contractions in the strong-absorption limit") {
  const Eigen::MatrixXcd u = random_u2(99);
  const double mu = -30.0;  // e^mu ~ 1e-13: T ~ 0
  const auto retarded = wick_boson_retarded(u, mu, 0, 1, 8);
  CHECK(std::abs(retarded.fock_value) < 1e-12);
  const auto advanced_diag = wick_boson_advanced(u, mu, 1, 1, 8);
  CHECK(std::abs(advanced_diag.fock_value - 1.0) < 1e-12);
  const auto advanced_off = wick_boson_advanced(u, mu, 0, 1, 8);
  CHECK(std::abs(advanced_off.fock_value) < 1e-12);
}

TEST_CASE("second quantization is multiplicative on one link") {
  Eigen::MatrixXcd ur(1, 1), us(1, 1);
  ur(0, 0) = std::polar(1.0, 0.83);
  us(0, 0) = std::polar(1.0, -1.91);
  const int n_max = 30;
  const auto lhs = boson_retarded_rho(Eigen::MatrixXcd(ur * us), n_max);
  const Eigen::MatrixXcd rhs =
      boson_retarded_rho(ur, n_max) * boson_retarded_rho(us, n_max);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
  const auto flhs = fermion_retarded_rho(Eigen::MatrixXcd(ur * us));
  const Eigen::MatrixXcd frhs =
      fermion_retarded_rho(ur) * fermion_retarded_rho(us);
  CHECK((flhs - frhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log of a unitary is anti-Hermitian with principal phases") {
  const Eigen::MatrixXcd u = random_u2(1001);
  const Eigen::MatrixXcd x = log_unitary(u);
  CHECK((x + x.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(x);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(es.eigenvalues()[i].real()) < 1e-10);
    CHECK(es.eigenvalues()[i].imag() <= kPi + 1e-12);
    CHECK(es.eigenvalues()[i].imag() > -kPi - 1e-12);
  }
}
