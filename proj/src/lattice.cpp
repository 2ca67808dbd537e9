#include "mbl/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace mbl {

Lattice make_lattice(const Vec2& e1, const Vec2& e2) {
    const double area = wedge(e1, e2);
    if (std::abs(area) < 1e-12 * e1.norm() * e2.norm())
        fail("DegenerateLattice", "generators are (nearly) colinear");
    Lattice lat;
    lat.e1 = e1;
    lat.e2 = e2;
    // dual basis solves <dual_j, e_k> = 2*pi*delta_jk
    lat.dual1 = Vec2(e2.y, -e2.x) * (two_pi / area);
    lat.dual2 = Vec2(-e1.y, e1.x) * (two_pi / area);
    lat.cell_area = std::abs(area);
    lat.dual_cell_area = std::abs(wedge(lat.dual1, lat.dual2));
    return lat;
}

std::vector<LatticeSite> enumerate_sites(const Lattice& lat, double radius) {
    if (!(radius > 0.0)) fail("BadArgument", "enumerate_sites: radius must be positive");
    // n_j = <dual_j, position>/(2*pi), so |n_j| <= radius*|dual_j|/(2*pi).
    const int b1 = static_cast<int>(std::floor(radius * lat.dual1.norm() / two_pi)) + 1;
    const int b2 = static_cast<int>(std::floor(radius * lat.dual2.norm() / two_pi)) + 1;
    std::vector<LatticeSite> sites;
    for (int a = -b1; a <= b1; ++a) {
        for (int b = -b2; b <= b2; ++b) {
            const Vec2 pos = lat.site_position({a, b});
            if (pos.norm() <= radius) sites.push_back({{a, b}, pos});
        }
    }
    std::sort(sites.begin(), sites.end(),
              [](const LatticeSite& s, const LatticeSite& t) { return s.index < t.index; });
    return sites;
}

} // namespace mbl
