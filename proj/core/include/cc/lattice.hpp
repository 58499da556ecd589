#pragma once

#include <array>
#include <utility>
#include <vector>

#include "cc/types.hpp"

namespace cc::lattice {

// Directed-link square lattice.
//
// Nodes sit at integer points (x, y), 0 <= x < lx, 0 <= y < ly. A node is an
// "A node" when x + y is even. Horizontal links point B -> A, vertical links
// point A -> B; every plaquette then circulates, clockwise on the checkerboard
// of plaquettes whose south-west corner is an A node, counterclockwise on the
// complement. A nodes scatter horizontal-in to vertical-out, B nodes the
// reverse, so one step advances the sublattice class l -> l+1 mod 4 with
//   class 0: horizontal links on even rows     class 2: odd rows
//   class 1: vertical links on even columns    class 3: odd columns

struct LinkRecord {
  LinkId id = kNoLink;
  NodeId tail = kNoNode;  // kNoNode for a dangling end on a cylinder
  NodeId head = kNoNode;
  Orientation orientation = Orientation::kPlusX;
  int cls = 0;          // sublattice class 0..3
  double mid_x = 0.0;   // midpoint, half-integer coordinates
  double mid_y = 0.0;
  bool terminal = false;  // cylinder absorbing slot at an open edge
};

struct NodeRecord {
  NodeId id = kNoNode;
  int x = 0;
  int y = 0;
  bool a_node = false;
  // Incident links by compass direction of the link midpoint: W, E, N, S.
  std::array<LinkId, 4> west_east_north_south{kNoLink, kNoLink, kNoLink,
                                              kNoLink};

  LinkId west() const { return west_east_north_south[0]; }
  LinkId east() const { return west_east_north_south[1]; }
  LinkId north() const { return west_east_north_south[2]; }
  LinkId south() const { return west_east_north_south[3]; }
};

class NetworkGeometry {
 public:
  // lx, ly must be even and >= 4; throws DimensionError otherwise.
  static NetworkGeometry build(int lx, int ly, Topology topology);

  int lx() const { return lx_; }
  int ly() const { return ly_; }
  Topology topology() const { return topology_; }

  int num_links() const { return static_cast<int>(links_.size()); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  const LinkRecord& link(LinkId l) const { return links_.at(l); }
  const NodeRecord& node(NodeId n) const { return nodes_.at(n); }
  const std::vector<LinkRecord>& links() const { return links_; }
  const std::vector<NodeRecord>& nodes() const { return nodes_; }

  NodeId node_at(int x, int y) const;

  // Left-turn / right-turn successors; kNoLink past an open edge.
  LinkId left_successor(LinkId l) const { return succ_left_.at(l); }
  LinkId right_successor(LinkId l) const { return succ_right_.at(l); }
  std::pair<LinkId, LinkId> successors(LinkId l) const {
    return {succ_left_.at(l), succ_right_.at(l)};
  }

  // Image of a link under rotation by +pi/2 about a clockwise-plaquette
  // center (torus only). Used by the rotation-covariance checks.
  LinkId rotated_link(LinkId l, Complex center) const;

  // Minimal-image complex separation a - b of two positions.
  Complex displacement(Complex a, Complex b) const;

  Complex link_midpoint(LinkId l) const {
    return {links_[l].mid_x, links_[l].mid_y};
  }
  static Complex direction(Orientation o);

 private:
  NetworkGeometry() = default;
  void index_incident_links();
  void build_successors();

  int lx_ = 0;
  int ly_ = 0;
  Topology topology_ = Topology::kTorus;
  std::vector<LinkRecord> links_;
  std::vector<NodeRecord> nodes_;
  std::vector<LinkId> succ_left_;
  std::vector<LinkId> succ_right_;
};

// Medial lattice Gamma: 0-cells are clockwise-plaquette centers, 1-cells
// biject with nodes, 2-cells are counterclockwise plaquettes. Each 1-cell e
// carries a unit tangent t (NE diagonal at A nodes, SE at B nodes) and the
// outer orientation n = R t with R the counterclockwise rotation; "plus side"
// is the side n points into. The rotated cell Re has tangent R t.
struct MedialEdge {
  NodeId node = kNoNode;
  // The node's four links partitioned for e: incoming/outgoing x plus/minus.
  LinkId in_plus = kNoLink;
  LinkId in_minus = kNoLink;
  LinkId out_plus = kNoLink;
  LinkId out_minus = kNoLink;
  // The same four links re-partitioned for the rotated edge Re.
  LinkId r_in_plus = kNoLink;
  LinkId r_in_minus = kNoLink;
  LinkId r_out_plus = kNoLink;
  LinkId r_out_minus = kNoLink;
  Complex tangent;    // unit vector along e
  // 0-cells at the two ends of e; e runs cell_from -> cell_to along tangent.
  int cell_from = -1;  // -1 on a cylinder when the plaquette is incomplete
  int cell_to = -1;
  bool complete = false;  // all four incident links are non-terminal
};

struct MedialLattice {
  struct BoundaryEntry {
    int edge = -1;
    double sign = 0.0;  // +1 when the outer orientation of e points out of A
  };

  std::vector<Complex> zero_cells;  // clockwise-plaquette centers
  std::vector<Complex> two_cells;   // counterclockwise-plaquette centers
  std::vector<MedialEdge> edges;    // indexed by NodeId
  std::vector<std::array<BoundaryEntry, 4>> two_cell_boundaries;
  int rotation_sign = +1;  // +1: R counterclockwise

  const MedialEdge& edge(int e) const { return edges.at(e); }
  int num_edges() const { return static_cast<int>(edges.size()); }
};

MedialLattice build_medial(const NetworkGeometry& geom);

// Minimal-image separation w_a - w_b on the torus; |Re|, |Im| <= L/2.
Complex torus_displacement(const NetworkGeometry& geom, Complex a, Complex b);

}  // namespace cc::lattice
