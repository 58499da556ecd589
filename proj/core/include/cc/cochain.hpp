#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cc/lattice.hpp"
#include "cc/types.hpp"

namespace cc::cochain {

using lattice::MedialLattice;
using lattice::NetworkGeometry;

// 1-cochain on the medial lattice: the current j(e) across each 1-cell and
// the current j(Re) across the rotated cell (equivalently, along e). Values
// use the symmetrized form
//   j(e) = [ (j_{li-} - j_{lo-}) + (j_{lo+} - j_{li+}) ] / 2,
// which agrees with either single expression whenever Kirchhoff's rule holds.
struct Cochain1 {
  std::vector<Complex> value;       // j(e)
  std::vector<Complex> star_value;  // j(Re)
  double max_mismatch = 0.0;        // between the two defining expressions
  NodeId worst_node = kNoNode;
};

Cochain1 current_cochain(const NetworkGeometry& geom, const MedialLattice& m,
                         const Eigen::VectorXcd& link_current,
                         double kirchhoff_tol = 1e-8,
                         const std::vector<NodeId>& exclude_nodes = {});

/// Signed sum of j over the boundary of 2-cell a; zero for closed cochains.
Complex two_cell_divergence(const MedialLattice& m, const Cochain1& j, int a);

// Weights of the holomorphic current component at edge e:
// j10(e) = sum_l w_e(l) j_l with w_e(l) = 2^{-3/2} e^{-i theta_e(l)}; the
// table is (1+i)/4, (-1+i)/4, (-1-i)/4, (1-i)/4 on lo+, li+, lo-, li-.
using WeightTable = std::array<std::pair<LinkId, Complex>, 4>;
WeightTable j10_weights(const MedialLattice& m, int e);

/// Anti-holomorphic partner (conjugate weights).
WeightTable j01_weights(const MedialLattice& m, int e);

/// Plain-cochain weights: +1/2 on li-/lo+, -1/2 on lo-/li+.
WeightTable chain_weights(const MedialLattice& m, int e);

using PairFn = std::function<Complex(LinkId, LinkId)>;

// Doubly-projected correlator components: the j10 (or j01) weights are
// applied in both arguments of the pair table.
Complex project_zz(const MedialLattice& m, const PairFn& table, int e, int e2);
Complex project_zzbar(const MedialLattice& m, const PairFn& table, int e,
                      int e2);
Complex project_zbarz(const MedialLattice& m, const PairFn& table, int e,
                      int e2);
Complex project_zbarzbar(const MedialLattice& m, const PairFn& table, int e,
                         int e2);
/// Plain double cochain sigma(e, e'): chain weights in both arguments.
Complex project_plain(const MedialLattice& m, const PairFn& table, int e,
                      int e2);

// Chains on the medial lattice: (edge, coefficient) pairs.
struct Cycle {
  std::vector<std::pair<int, double>> edges;
};

/// Homologically nontrivial loop of the medial edges at node row y; positive
/// coefficients count current in the +y direction.
Cycle row_cycle(const NetworkGeometry& geom, int y);

/// Loop at node column x (torus); coefficients count current in +x.
Cycle column_cycle(const NetworkGeometry& geom, const MedialLattice& m, int x);

/// Boundary of a set of 2-cells, outward-oriented: a contractible cycle.
Cycle boundary_cycle(const MedialLattice& m, const std::vector<int>& two_cells);

/// Diamond of 2-cells within L1 medial radius rho of a center 2-cell.
std::vector<int> two_cell_diamond(const NetworkGeometry& geom,
                                  const MedialLattice& m, int center_two_cell,
                                  int rho);

/// k x k block of 2-cells (in the diagonal 2-cell lattice) cornered at a
/// 2-cell; its boundary is a square cycle of perimeter 4k.
std::vector<int> two_cell_block(const NetworkGeometry& geom,
                                const MedialLattice& m, int corner_two_cell,
                                int k);

/// Push a cycle across one 2-cell: adds its outward boundary (chain sum).
Cycle deform_across(const Cycle& c, const MedialLattice& m, int two_cell);

/// Current crossing the cycle: sum of coeff * j(e).
Complex cross_current(const Cochain1& j, const Cycle& c);

/// Current circulation: the lattice sum of coeff * j(Re) along the cycle.
Complex circulation(const Cochain1& j, const Cycle& c);

}  // namespace cc::cochain
