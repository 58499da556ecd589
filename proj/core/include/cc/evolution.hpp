#pragma once

#include <cstdint>
#include <vector>

#include "cc/lattice.hpp"
#include "cc/types.hpp"

namespace cc::evolution {

// Node scattering amplitudes a+ = e^{i pi/4} cos(beta), a- = e^{-i pi/4}
// sin(beta). The +-pi/4 phases keep the node matrix unitary for every beta;
// beta = pi/4 is the critical point.
struct ScatteringParams {
  double beta = kPi / 4;

  Complex a_plus() const;
  Complex a_minus() const;
  bool critical(double tol = 1e-12) const;
};

/// Test hook: kSwapLeftRight deliberately exchanges the turn amplitudes,
/// which breaks the class-advance/Bloch structure (negative control).
enum class TurnConvention { kStandard, kSwapLeftRight };

/// Per-link uniform phases, reproducible from (master seed, index, link id).
struct DisorderRealization {
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;
  std::vector<double> phases;
};

struct Regularization {
  enum class Kind { kNone, kAbsorbingBackground, kPointContacts };
  Kind kind = Kind::kNone;
  double mu = 0.0;
  std::vector<LinkId> contacts;

  static Regularization none() { return {}; }
  static Regularization absorbing(double mu);           // requires mu < 0
  static Regularization point_contacts(std::vector<LinkId> contacts);
};

/// mu = -1/(2L): absorption length of order the system size.
double default_mu(int l);

// U_s: column l has a+ at row l_plus and a- at row l_minus. Columns of
// terminal links are zero (amplitude leaves the system).
SparseOp build_us(const lattice::NetworkGeometry& geom,
                  const ScatteringParams& params,
                  TurnConvention convention = TurnConvention::kStandard);

DisorderRealization sample_disorder(const lattice::NetworkGeometry& geom,
                                    std::uint64_t master_seed,
                                    std::uint64_t index);

/// U = U_r U_s (random phase per row).
SparseOp compose_u(const SparseOp& us, const DisorderRealization& disorder);

/// T = e^{mu} U_r U_s or Q U_r U_s with Q = 1 - sum |l_c><l_c|.
SparseOp compose_t(const SparseOp& us, const DisorderRealization& disorder,
                   const Regularization& reg);

}  // namespace cc::evolution
