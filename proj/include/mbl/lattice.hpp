#ifndef MBL_LATTICE_HPP
#define MBL_LATTICE_HPP

#include <vector>

#include "mbl/common.hpp"

namespace mbl {

/// Planar vector product u1*v2 - u2*v1.
inline double wedge(const Vec2& u, const Vec2& v) { return u.x * v.y - u.y * v.x; }

/// Bravais lattice with its dual basis and cell measures.
/// <dual_j, e_k> = 2*pi*delta_jk, cell_area * dual_cell_area = (2*pi)^2.
struct Lattice {
    Vec2 e1, e2;
    Vec2 dual1, dual2;
    double cell_area = 0.0;
    double dual_cell_area = 0.0;

    Vec2 site_position(IntPair n) const { return e1 * double(n.a) + e2 * double(n.b); }
    Vec2 dual_vector(IntPair g) const { return dual1 * double(g.a) + dual2 * double(g.b); }
};

struct LatticeSite {
    IntPair index;
    Vec2 position;
};

/// Throws DegenerateLattice when |e1 ^ e2| < 1e-12 |e1||e2|.
Lattice make_lattice(const Vec2& e1, const Vec2& e2);

/// All sites with |position| <= radius, sorted lexicographically by index.
std::vector<LatticeSite> enumerate_sites(const Lattice& lat, double radius);

} // namespace mbl

#endif
