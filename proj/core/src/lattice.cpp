#include "cc/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace cc::lattice {

namespace {

double wrap_half_open(double d, double period) {
  d = std::fmod(d, period);
  if (d <= -period / 2) d += period;
  if (d > period / 2) d -= period;
  return d;
}

int positive_mod(int v, int m) {
  int r = v % m;
  return r < 0 ? r + m : r;
}

}  // namespace

Complex NetworkGeometry::direction(Orientation o) {
  switch (o) {
    case Orientation::kPlusX: return {1.0, 0.0};
    case Orientation::kMinusX: return {-1.0, 0.0};
    case Orientation::kPlusY: return {0.0, 1.0};
    case Orientation::kMinusY: return {0.0, -1.0};
  }
  return {0.0, 0.0};
}

NodeId NetworkGeometry::node_at(int x, int y) const {
  x = positive_mod(x, lx_);
  if (topology_ == Topology::kTorus) {
    y = positive_mod(y, ly_);
  } else if (y < 0 || y >= ly_) {
    return kNoNode;
  }
  return x + lx_ * y;
}

Complex NetworkGeometry::displacement(Complex a, Complex b) const {
  double dx = wrap_half_open(a.real() - b.real(), lx_);
  double dy = a.imag() - b.imag();
  if (topology_ == Topology::kTorus) dy = wrap_half_open(dy, ly_);
  return {dx, dy};
}

Complex torus_displacement(const NetworkGeometry& geom, Complex a, Complex b) {
  return geom.displacement(a, b);
}

NetworkGeometry NetworkGeometry::build(int lx, int ly, Topology topology) {
  if (lx < 4 || ly < 4)
    throw DimensionError("lattice dimensions must be at least 4, got " +
                         std::to_string(lx) + "x" + std::to_string(ly));
  if (lx % 2 != 0 || ly % 2 != 0)
    throw DimensionError("lattice dimensions must be even, got " +
                         std::to_string(lx) + "x" + std::to_string(ly));

  NetworkGeometry g;
  g.lx_ = lx;
  g.ly_ = ly;
  g.topology_ = topology;

  g.nodes_.resize(static_cast<std::size_t>(lx) * ly);
  for (int y = 0; y < ly; ++y)
    for (int x = 0; x < lx; ++x) {
      NodeRecord& n = g.nodes_[x + lx * y];
      n.id = x + lx * y;
      n.x = x;
      n.y = y;
      n.a_node = (x + y) % 2 == 0;
    }

  auto horizontal = [&](int x, int y) {
    // Link between (x, y) and (x+1, y); B -> A.
    LinkRecord l;
    NodeId n1 = g.node_at(x, y);
    NodeId n2 = g.node_at(x + 1, y);
    if ((x + y) % 2 == 0) {  // A node at (x, y)
      l.tail = n2;
      l.head = n1;
      l.orientation = Orientation::kMinusX;
    } else {
      l.tail = n1;
      l.head = n2;
      l.orientation = Orientation::kPlusX;
    }
    l.cls = (y % 2 == 0) ? 0 : 2;
    l.mid_x = x + 0.5;
    l.mid_y = y;
    return l;
  };
  auto vertical = [&](int x, int y) {
    // Link between (x, y) and (x, y+1); A -> B.
    LinkRecord l;
    NodeId n1 = g.node_at(x, y);
    NodeId n2 = g.node_at(x, y + 1);
    if ((x + y) % 2 == 0) {  // A node at (x, y)
      l.tail = n1;
      l.head = n2;
      l.orientation = Orientation::kPlusY;
    } else {
      l.tail = n2;
      l.head = n1;
      l.orientation = Orientation::kMinusY;
    }
    l.cls = (x % 2 == 0) ? 1 : 3;
    l.mid_x = x;
    l.mid_y = y + 0.5;
    return l;
  };

  for (int y = 0; y < ly; ++y)
    for (int x = 0; x < lx; ++x) g.links_.push_back(horizontal(x, y));

  const int vy_max = (topology == Topology::kTorus) ? ly : ly - 1;
  for (int y = 0; y < vy_max; ++y)
    for (int x = 0; x < lx; ++x) g.links_.push_back(vertical(x, y));

  if (topology == Topology::kCylinderX) {
    // Absorbing terminal slots at the open edges. A nodes keep their
    // outgoing vertical, B nodes their incoming one.
    for (int x = 0; x < lx; ++x) {  // below row 0
      LinkRecord l;
      NodeId n = g.node_at(x, 0);
      if (g.nodes_[n].a_node) {
        l.tail = n;
        l.orientation = Orientation::kMinusY;
      } else {
        l.head = n;
        l.orientation = Orientation::kPlusY;
      }
      l.cls = (x % 2 == 0) ? 1 : 3;
      l.mid_x = x;
      l.mid_y = -0.5;
      l.terminal = true;
      g.links_.push_back(l);
    }
    for (int x = 0; x < lx; ++x) {  // above row ly-1
      LinkRecord l;
      NodeId n = g.node_at(x, ly - 1);
      if (g.nodes_[n].a_node) {
        l.tail = n;
        l.orientation = Orientation::kPlusY;
      } else {
        l.head = n;
        l.orientation = Orientation::kMinusY;
      }
      l.cls = (x % 2 == 0) ? 1 : 3;
      l.mid_x = x;
      l.mid_y = ly - 0.5;
      l.terminal = true;
      g.links_.push_back(l);
    }
  }

  for (std::size_t i = 0; i < g.links_.size(); ++i)
    g.links_[i].id = static_cast<LinkId>(i);

  g.index_incident_links();
  g.build_successors();
  return g;
}

void NetworkGeometry::index_incident_links() {
  for (const LinkRecord& l : links_) {
    for (NodeId n : {l.tail, l.head}) {
      if (n == kNoNode) continue;
      const NodeRecord& node = nodes_[n];
      Complex off = displacement({l.mid_x, l.mid_y},
                                 {static_cast<double>(node.x),
                                  static_cast<double>(node.y)});
      int slot;
      if (off.real() < -0.25)
        slot = 0;  // W
      else if (off.real() > 0.25)
        slot = 1;  // E
      else if (off.imag() > 0.25)
        slot = 2;  // N
      else
        slot = 3;  // S
      nodes_[n].west_east_north_south[slot] = l.id;
    }
  }
}

void NetworkGeometry::build_successors() {
  succ_left_.assign(links_.size(), kNoLink);
  succ_right_.assign(links_.size(), kNoLink);
  for (const LinkRecord& l : links_) {
    if (l.head == kNoNode) continue;  // terminal slot: nothing follows
    const NodeRecord& h = nodes_[l.head];
    const Complex d = direction(l.orientation);
    auto outgoing_along = [&](Complex dir) -> LinkId {
      int slot;
      if (dir.real() > 0.5)
        slot = 1;  // E
      else if (dir.real() < -0.5)
        slot = 0;  // W
      else if (dir.imag() > 0.5)
        slot = 2;  // N
      else
        slot = 3;  // S
      LinkId cand = h.west_east_north_south[slot];
      if (cand == kNoLink) return kNoLink;
      return links_[cand].tail == h.id ? cand : kNoLink;
    };
    succ_left_[l.id] = outgoing_along(Complex(0, 1) * d);
    succ_right_[l.id] = outgoing_along(Complex(0, -1) * d);
  }
}

LinkId NetworkGeometry::rotated_link(LinkId l, Complex center) const {
  const LinkRecord& rec = links_.at(l);
  Complex rel = displacement({rec.mid_x, rec.mid_y}, center);
  Complex p = center + Complex(0, 1) * rel;
  double mx = wrap_half_open(p.real(), lx_);
  if (mx <= -static_cast<double>(lx_) / 2 + 0.25) mx += lx_;
  double my = wrap_half_open(p.imag(), ly_);
  Complex dir = Complex(0, 1) * direction(rec.orientation);

  // Locate the link with the rotated midpoint.
  for (const LinkRecord& cand : links_) {
    Complex diff = displacement({cand.mid_x, cand.mid_y}, {mx, my});
    if (std::abs(diff) < 1e-9) {
      if (std::abs(direction(cand.orientation) - dir) > 1e-9)
        throw GeometryError("rotation center breaks the directed structure");
      return cand.id;
    }
  }
  throw GeometryError("rotated link not found; invalid rotation center");
}

MedialLattice build_medial(const NetworkGeometry& geom) {
  const int lx = geom.lx();
  const int ly = geom.ly();
  const bool torus = geom.topology() == Topology::kTorus;

  MedialLattice m;
  m.rotation_sign = +1;

  // Plaquettes indexed by their south-west corner.
  const int py_max = torus ? ly : ly - 1;
  std::vector<int> zero_index(static_cast<std::size_t>(lx) * ly, -1);
  std::vector<int> two_index(static_cast<std::size_t>(lx) * ly, -1);
  for (int py = 0; py < py_max; ++py)
    for (int px = 0; px < lx; ++px) {
      Complex c(px + 0.5, py + 0.5);
      if ((px + py) % 2 == 0) {
        zero_index[px + lx * py] = static_cast<int>(m.zero_cells.size());
        m.zero_cells.push_back(c);
      } else {
        two_index[px + lx * py] = static_cast<int>(m.two_cells.size());
        m.two_cells.push_back(c);
      }
    }

  auto cell_at = [&](const std::vector<int>& index, double cx,
                     double cy) -> int {
    int px = static_cast<int>(std::floor(cx));
    int py = static_cast<int>(std::floor(cy));
    px = ((px % lx) + lx) % lx;
    if (torus)
      py = ((py % ly) + ly) % ly;
    else if (py < 0 || py >= ly - 1)
      return -1;
    return index[px + lx * py];
  };

  m.edges.resize(geom.num_nodes());
  for (const NodeRecord& n : geom.nodes()) {
    MedialEdge& e = m.edges[n.id];
    e.node = n.id;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    e.tangent = n.a_node ? Complex(inv_sqrt2, inv_sqrt2)
                         : Complex(inv_sqrt2, -inv_sqrt2);
    const Complex normal = Complex(0, 1) * e.tangent;      // R t
    const Complex r_normal = -e.tangent;                   // R (R t)
    const Complex npos(static_cast<double>(n.x), static_cast<double>(n.y));

    e.complete = true;
    for (LinkId lid : n.west_east_north_south) {
      if (lid == kNoLink) {
        e.complete = false;
        continue;
      }
      const LinkRecord& l = geom.link(lid);
      if (l.terminal) e.complete = false;
      const Complex off = geom.displacement(geom.link_midpoint(lid), npos);
      const bool incoming = l.head == n.id;
      const bool plus = (normal.real() * off.real() +
                         normal.imag() * off.imag()) > 0;
      const bool r_plus = (r_normal.real() * off.real() +
                           r_normal.imag() * off.imag()) > 0;
      (incoming ? (plus ? e.in_plus : e.in_minus)
                : (plus ? e.out_plus : e.out_minus)) = lid;
      (incoming ? (r_plus ? e.r_in_plus : e.r_in_minus)
                : (r_plus ? e.r_out_plus : e.r_out_minus)) = lid;
    }

    const Complex from = npos - e.tangent * std::sqrt(0.5);
    const Complex to = npos + e.tangent * std::sqrt(0.5);
    e.cell_from = cell_at(zero_index, from.real(), from.imag());
    e.cell_to = cell_at(zero_index, to.real(), to.imag());
    if (e.cell_from < 0 || e.cell_to < 0) e.complete = false;
  }

  // Boundary of each 2-cell: the medial edges of its four corner nodes,
  // signed by whether the outer orientation points out of the cell.
  m.two_cell_boundaries.resize(m.two_cells.size());
  for (std::size_t a = 0; a < m.two_cells.size(); ++a) {
    const Complex c = m.two_cells[a];
    int slot = 0;
    for (double dx : {-0.5, 0.5})
      for (double dy : {-0.5, 0.5}) {
        NodeId n = geom.node_at(
            static_cast<int>(std::llround(std::floor(c.real() + dx))),
            static_cast<int>(std::llround(std::floor(c.imag() + dy))));
        MedialLattice::BoundaryEntry be;
        if (n != kNoNode) {
          const MedialEdge& e = m.edges[n];
          const NodeRecord& node = geom.node(n);
          const Complex rel = geom.displacement(
              {static_cast<double>(node.x), static_cast<double>(node.y)}, c);
          const Complex normal = Complex(0, 1) * e.tangent;
          be.edge = n;
          be.sign = (normal.real() * rel.real() +
                     normal.imag() * rel.imag()) > 0
                        ? 1.0
                        : -1.0;
        }
        m.two_cell_boundaries[a][slot++] = be;
      }
  }

  return m;
}

}  // namespace cc::lattice
