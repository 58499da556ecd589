#include "cc/cochain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace cc::cochain {

namespace {

bool excluded(const std::vector<NodeId>& list, NodeId n) {
  return std::find(list.begin(), list.end(), n) != list.end();
}

}  // namespace

Cochain1 current_cochain(const NetworkGeometry& geom, const MedialLattice& m,
                         const Eigen::VectorXcd& link_current,
                         double kirchhoff_tol,
                         const std::vector<NodeId>& exclude_nodes) {
  if (link_current.size() != geom.num_links())
    throw DomainError("current vector size mismatch");
  Cochain1 out;
  out.value.resize(m.num_edges());
  out.star_value.resize(m.num_edges());

  for (int e = 0; e < m.num_edges(); ++e) {
    const lattice::MedialEdge& me = m.edge(e);
    auto j = [&](LinkId l) -> Complex {
      return l == kNoLink ? Complex(0) : link_current[l];
    };

    const Complex across_a = j(me.in_minus) - j(me.out_minus);
    const Complex across_b = j(me.out_plus) - j(me.in_plus);
    out.value[e] = 0.5 * (across_a + across_b);

    const double mismatch = std::abs(across_a - across_b);
    if (mismatch > out.max_mismatch && !excluded(exclude_nodes, me.node)) {
      out.max_mismatch = mismatch;
      out.worst_node = me.node;
    }

    const Complex along_a = j(me.r_in_minus) - j(me.r_out_minus);
    const Complex along_b = j(me.r_out_plus) - j(me.r_in_plus);
    out.star_value[e] = 0.5 * (along_a + along_b);
  }

  if (out.max_mismatch > kirchhoff_tol)
    throw KirchhoffViolation(
        "Kirchhoff's rule violated at node " + std::to_string(out.worst_node) +
        " (mismatch " + std::to_string(out.max_mismatch) + ")");
  return out;
}

Complex two_cell_divergence(const MedialLattice& m, const Cochain1& j, int a) {
  Complex sum = 0;
  for (const auto& be : m.two_cell_boundaries.at(a))
    if (be.edge >= 0) sum += be.sign * j.value[be.edge];
  return sum;
}

namespace {

WeightTable make_table(const lattice::MedialEdge& me, Complex wi_plus,
                       Complex wi_minus, Complex wo_plus, Complex wo_minus) {
  return WeightTable{{{me.in_plus, wi_plus},
                      {me.in_minus, wi_minus},
                      {me.out_plus, wo_plus},
                      {me.out_minus, wo_minus}}};
}

// s-weights of the plain cochain and their counterparts for Re, combined to
// w = (s_e - i s_Re) / 2 per link.
WeightTable holo_table(const lattice::MedialEdge& me, double star_sign) {
  std::array<std::pair<LinkId, Complex>, 4> table;
  const LinkId links[4] = {me.in_plus, me.in_minus, me.out_plus, me.out_minus};
  const double s_e[4] = {-0.5, 0.5, 0.5, -0.5};
  for (int i = 0; i < 4; ++i) {
    const LinkId l = links[i];
    double s_r = 0.0;
    if (l == me.r_in_plus) s_r = -0.5;
    if (l == me.r_in_minus) s_r = 0.5;
    if (l == me.r_out_plus) s_r = 0.5;
    if (l == me.r_out_minus) s_r = -0.5;
    table[i] = {l, 0.5 * (Complex(s_e[i], 0) -
                          star_sign * Complex(0, 1) * Complex(s_r, 0))};
  }
  return table;
}

}  // namespace

WeightTable j10_weights(const MedialLattice& m, int e) {
  return holo_table(m.edge(e), +1.0);
}

WeightTable j01_weights(const MedialLattice& m, int e) {
  return holo_table(m.edge(e), -1.0);
}

WeightTable chain_weights(const MedialLattice& m, int e) {
  const lattice::MedialEdge& me = m.edge(e);
  return make_table(me, {-0.5, 0}, {0.5, 0}, {0.5, 0}, {-0.5, 0});
}

namespace {

Complex project_pair(const WeightTable& we, const WeightTable& we2,
                     const PairFn& table) {
  Complex sum = 0;
  for (const auto& [l, w] : we) {
    if (l == kNoLink) throw IncompleteDataError("edge touches an open end");
    for (const auto& [l2, w2] : we2) {
      if (l2 == kNoLink) throw IncompleteDataError("edge touches an open end");
      sum += w * w2 * table(l, l2);
    }
  }
  return sum;
}

}  // namespace

Complex project_zz(const MedialLattice& m, const PairFn& table, int e,
                   int e2) {
  return project_pair(j10_weights(m, e), j10_weights(m, e2), table);
}

Complex project_zzbar(const MedialLattice& m, const PairFn& table, int e,
                      int e2) {
  return project_pair(j10_weights(m, e), j01_weights(m, e2), table);
}

Complex project_zbarz(const MedialLattice& m, const PairFn& table, int e,
                      int e2) {
  return project_pair(j01_weights(m, e), j10_weights(m, e2), table);
}

Complex project_zbarzbar(const MedialLattice& m, const PairFn& table, int e,
                         int e2) {
  return project_pair(j01_weights(m, e), j01_weights(m, e2), table);
}

Complex project_plain(const MedialLattice& m, const PairFn& table, int e,
                      int e2) {
  return project_pair(chain_weights(m, e), chain_weights(m, e2), table);
}

Cycle row_cycle(const NetworkGeometry& geom, int y) {
  if (y < 0 || y >= geom.ly()) throw IndexError("row out of range");
  Cycle c;
  for (int x = 0; x < geom.lx(); ++x)
    c.edges.emplace_back(geom.node_at(x, y), 1.0);
  return c;
}

Cycle column_cycle(const NetworkGeometry& geom, const MedialLattice& m,
                   int x) {
  if (geom.topology() != Topology::kTorus)
    throw GeometryError("column cycles wrap the y direction: torus only");
  if (x < 0 || x >= geom.lx()) throw IndexError("column out of range");
  Cycle c;
  for (int y = 0; y < geom.ly(); ++y) {
    const NodeId n = geom.node_at(x, y);
    // Count current in +x: positive where the outer orientation points +x.
    const Complex normal = Complex(0, 1) * m.edge(n).tangent;
    c.edges.emplace_back(n, normal.real() > 0 ? 1.0 : -1.0);
  }
  return c;
}

Cycle boundary_cycle(const MedialLattice& m,
                     const std::vector<int>& two_cells) {
  std::map<int, double> acc;
  for (int a : two_cells)
    for (const auto& be : m.two_cell_boundaries.at(a)) {
      if (be.edge < 0)
        throw GeometryError("2-cell touches an open boundary");
      acc[be.edge] += be.sign;
    }
  Cycle c;
  for (const auto& [e, s] : acc)
    if (s != 0.0) c.edges.emplace_back(e, s);
  return c;
}

std::vector<int> two_cell_diamond(const NetworkGeometry& geom,
                                  const MedialLattice& m, int center_two_cell,
                                  int rho) {
  const Complex c0 = m.two_cells.at(center_two_cell);
  std::vector<int> cells;
  for (int a = 0; a < static_cast<int>(m.two_cells.size()); ++a) {
    const Complex d = geom.displacement(m.two_cells[a], c0);
    // L1 distance in the diagonal lattice of 2-cells (spacing sqrt(2)).
    const double u = (d.real() + d.imag()) / 2.0;
    const double v = (d.real() - d.imag()) / 2.0;
    if (std::abs(u) + std::abs(v) <= rho + 1e-9) cells.push_back(a);
  }
  return cells;
}

std::vector<int> two_cell_block(const NetworkGeometry& geom,
                                const MedialLattice& m, int corner_two_cell,
                                int k) {
  const Complex c0 = m.two_cells.at(corner_two_cell);
  std::vector<int> cells;
  for (int a = 0; a < static_cast<int>(m.two_cells.size()); ++a) {
    const Complex d = geom.displacement(m.two_cells[a], c0);
    const double u = (d.real() + d.imag()) / 2.0;
    const double v = (d.real() - d.imag()) / 2.0;
    if (u > -0.5 && u < k - 0.5 && v > -0.5 && v < k - 0.5)
      cells.push_back(a);
  }
  return cells;
}

Cycle deform_across(const Cycle& c, const MedialLattice& m, int two_cell) {
  std::map<int, double> acc;
  for (const auto& [e, s] : c.edges) acc[e] += s;
  for (const auto& be : m.two_cell_boundaries.at(two_cell)) {
    if (be.edge < 0) throw GeometryError("2-cell touches an open boundary");
    acc[be.edge] += be.sign;
  }
  Cycle out;
  for (const auto& [e, s] : acc)
    if (s != 0.0) out.edges.emplace_back(e, s);
  return out;
}

Complex cross_current(const Cochain1& j, const Cycle& c) {
  Complex sum = 0;
  for (const auto& [e, s] : c.edges) sum += s * j.value[e];
  return sum;
}

Complex circulation(const Cochain1& j, const Cycle& c) {
  Complex sum = 0;
  for (const auto& [e, s] : c.edges) sum += s * j.star_value[e];
  return sum;
}

}  // namespace cc::cochain
