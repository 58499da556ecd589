#include "cc/lattice.hpp"

#include <Eigen/Dense>
#include <array>
#include <map>
#include <set>

#include "doctest.h"

using namespace cc;
using namespace cc::lattice;

TEST_CASE("4x4 torus counts") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  CHECK(g.num_links() == 32);
  CHECK(g.num_nodes() == 16);
  std::array<int, 4> per_class{};
  for (const auto& l : g.links()) per_class[l.cls]++;
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 8);
}

TEST_CASE("dimension errors") {
  CHECK_THROWS_AS(NetworkGeometry::build(5, 4, Topology::kTorus),
                  DimensionError);
  CHECK_THROWS_AS(NetworkGeometry::build(4, 7, Topology::kTorus),
                  DimensionError);
  CHECK_THROWS_AS(NetworkGeometry::build(2, 4, Topology::kTorus),
                  DimensionError);
}

TEST_CASE("every torus node has 2 in and 2 out") {
  const auto g = NetworkGeometry::build(6, 4, Topology::kTorus);
  for (const auto& n : g.nodes()) {
    int in = 0, out = 0;
    for (LinkId l : n.west_east_north_south) {
      REQUIRE(l != kNoLink);
      if (g.link(l).head == n.id) ++in;
      if (g.link(l).tail == n.id) ++out;
    }
    CHECK(in == 2);
    CHECK(out == 2);
  }
}

TEST_CASE("class advances by one along both turns") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  for (const auto& l : g.links()) {
    auto [lp, lm] = g.successors(l.id);
    CHECK(g.link(lp).cls == (l.cls + 1) % 4);
    CHECK(g.link(lm).cls == (l.cls + 1) % 4);
    CHECK(g.link(lp).tail == l.head);
    CHECK(g.link(lm).tail == l.head);
  }
}

TEST_CASE("left/right successor of a +x link") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  for (const auto& l : g.links()) {
    if (l.orientation != Orientation::kPlusX) continue;
    auto [lp, lm] = g.successors(l.id);
    CHECK(g.link(lp).orientation == Orientation::kPlusY);
    CHECK(g.link(lm).orientation == Orientation::kMinusY);
  }
}

TEST_CASE("successor maps are permutations and 4 turns close a plaquette") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  std::set<LinkId> left_images, right_images;
  for (const auto& l : g.links()) {
    left_images.insert(g.left_successor(l.id));
    right_images.insert(g.right_successor(l.id));
  }
  CHECK(static_cast<int>(left_images.size()) == g.num_links());
  CHECK(static_cast<int>(right_images.size()) == g.num_links());

  for (const auto& l : g.links()) {
    LinkId a = l.id;
    for (int i = 0; i < 4; ++i) a = g.left_successor(a);
    CHECK(a == l.id);
    LinkId b = l.id;
    for (int i = 0; i < 4; ++i) b = g.right_successor(b);
    CHECK(b == l.id);
  }
}

TEST_CASE("pi/2 rotation about a clockwise plaquette center preserves turns") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const Complex center(0.5, 0.5);  // plaquette with A node at its SW corner
  std::set<LinkId> image;
  for (const auto& l : g.links()) {
    const LinkId r = g.rotated_link(l.id, center);
    image.insert(r);
    CHECK(g.rotated_link(g.left_successor(l.id), center) ==
          g.left_successor(r));
    CHECK(g.rotated_link(g.right_successor(l.id), center) ==
          g.right_successor(r));
  }
  CHECK(static_cast<int>(image.size()) == g.num_links());
}

TEST_CASE("cylinder flags dangling terminal links") {
  const auto g = NetworkGeometry::build(6, 4, Topology::kCylinderX);
  int terminal = 0;
  for (const auto& l : g.links())
    if (l.terminal) {
      ++terminal;
      CHECK((l.tail == kNoNode || l.head == kNoNode));
    }
  CHECK(terminal == 12);  // one per boundary node

  // Boundary nodes carry exactly one terminal link, interior nodes none.
  for (const auto& n : g.nodes()) {
    int t = 0;
    for (LinkId l : n.west_east_north_south) {
      REQUIRE(l != kNoLink);
      if (g.link(l).terminal) ++t;
    }
    CHECK(t == ((n.y == 0 || n.y == g.ly() - 1) ? 1 : 0));
  }

  // Terminal slots with no head have no successors.
  for (const auto& l : g.links())
    if (l.terminal && l.head == kNoNode) {
      CHECK(g.left_successor(l.id) == kNoLink);
      CHECK(g.right_successor(l.id) == kNoLink);
    }
}

TEST_CASE("torus displacement minimal image") {
  const auto g16 = NetworkGeometry::build(16, 16, Topology::kTorus);
  CHECK(torus_displacement(g16, {3, 5}, {3, 5}) == Complex(0, 0));
  CHECK(torus_displacement(g16, {4, 6}, {1, 2}) == Complex(3, 4));
  const auto g8 = NetworkGeometry::build(8, 8, Topology::kTorus);
  CHECK(torus_displacement(g8, {7, 0}, {0, 0}) == Complex(-1, 0));
  for (double v :
       {torus_displacement(g8, {1, 1}, {6, 6}).real(),
        torus_displacement(g8, {1, 1}, {6, 6}).imag()})
    CHECK(std::abs(v) <= 4.0);
}

TEST_CASE("medial lattice counts and partitions") {
  const auto g = NetworkGeometry::build(4, 4, Topology::kTorus);
  const auto m = build_medial(g);
  CHECK(m.zero_cells.size() == 8);
  CHECK(m.two_cells.size() == 8);
  CHECK(m.num_edges() == 16);

  for (const auto& e : m.edges) {
    REQUIRE(e.complete);
    const auto& n = g.node(e.node);
    // One incoming and one outgoing link on each side.
    CHECK(g.link(e.in_plus).head == n.id);
    CHECK(g.link(e.in_minus).head == n.id);
    CHECK(g.link(e.out_plus).tail == n.id);
    CHECK(g.link(e.out_minus).tail == n.id);
    const std::set<LinkId> all{e.in_plus, e.in_minus, e.out_plus, e.out_minus};
    CHECK(all.size() == 4);
    const std::set<LinkId> rot{e.r_in_plus, e.r_in_minus, e.r_out_plus,
                               e.r_out_minus};
    CHECK(rot == all);
    CHECK(e.cell_from >= 0);
    CHECK(e.cell_to >= 0);
  }
}

TEST_CASE("each medial edge borders two 2-cells with opposite signs") {
  const auto g = NetworkGeometry::build(6, 6, Topology::kTorus);
  const auto m = build_medial(g);
  std::map<int, double> sign_sum;
  std::map<int, int> appearances;
  for (const auto& boundary : m.two_cell_boundaries)
    for (const auto& be : boundary) {
      REQUIRE(be.edge >= 0);
      CHECK(std::abs(be.sign) == 1.0);
      sign_sum[be.edge] += be.sign;
      appearances[be.edge] += 1;
    }
  for (const auto& e : m.edges) {
    CHECK(appearances[e.node] == 2);
    CHECK(sign_sum[e.node] == 0.0);
  }
}
