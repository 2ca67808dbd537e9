#include <doctest.h>

#include <cmath>

#include "mbl/lattice.hpp"

using namespace mbl;

TEST_CASE("wedge product") {
    CHECK(wedge({1, 0}, {0, 1}) == doctest::Approx(1.0));
    CHECK(wedge({2, 3}, {4, 5}) == doctest::Approx(-2.0));
    CHECK(wedge({0.7, -1.3}, {0.7, -1.3}) == doctest::Approx(0.0));
}

TEST_CASE("make_lattice duals and cell measures") {
    const Lattice sq = make_lattice({two_pi, 0}, {0, two_pi});
    CHECK(sq.dual1.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sq.dual1.y == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sq.dual2.y == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sq.cell_area == doctest::Approx(two_pi * two_pi));

    const Lattice unit = make_lattice({1, 0}, {0, 1});
    CHECK(unit.dual1.x == doctest::Approx(two_pi));
    CHECK(unit.dual2.y == doctest::Approx(two_pi));

    // duality relations for an oblique lattice
    const Lattice ob = make_lattice({1.3, 0.2}, {-0.4, 0.9});
    CHECK(dot(ob.dual1, ob.e1) == doctest::Approx(two_pi).epsilon(1e-12));
    CHECK(dot(ob.dual1, ob.e2) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dot(ob.dual2, ob.e2) == doctest::Approx(two_pi).epsilon(1e-12));
    CHECK(dot(ob.dual2, ob.e1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ob.cell_area * ob.dual_cell_area == doctest::Approx(two_pi * two_pi));
}

TEST_CASE("degenerate lattice is rejected") {
    CHECK_THROWS_WITH_AS(make_lattice({1, 0}, {2, 0}), doctest::Contains("DegenerateLattice"),
                         Error);
}

TEST_CASE("dual of dual recovers the generators") {
    const Lattice ob = make_lattice({1.1, -0.3}, {0.5, 2.2});
    const Lattice dd = make_lattice(ob.dual1, ob.dual2);
    CHECK(dd.dual1.x == doctest::Approx(ob.e1.x).epsilon(1e-10));
    CHECK(dd.dual1.y == doctest::Approx(ob.e1.y).epsilon(1e-10));
    CHECK(dd.dual2.x == doctest::Approx(ob.e2.x).epsilon(1e-10));
    CHECK(dd.dual2.y == doctest::Approx(ob.e2.y).epsilon(1e-10));
}

TEST_CASE("enumerate_sites counts and ordering") {
    const Lattice unit = make_lattice({1, 0}, {0, 1});
    const auto s1 = enumerate_sites(unit, 1.0);
    CHECK(s1.size() == 5);
    const auto s15 = enumerate_sites(unit, 1.5);
    CHECK(s15.size() == 9);

    // lexicographic order and index-negation symmetry
    for (std::size_t i = 1; i < s15.size(); ++i) CHECK(s15[i - 1].index < s15[i].index);
    for (const auto& s : s15) {
        bool found = false;
        for (const auto& t : s15)
            if (t.index.a == -s.index.a && t.index.b == -s.index.b) found = true;
        CHECK(found);
    }
    for (const auto& s : s15) {
        CHECK(s.position.x == doctest::Approx(double(s.index.a)));
        CHECK(s.position.y == doctest::Approx(double(s.index.b)));
    }
}

TEST_CASE("enumerate_sites count tracks the area estimate") {
    // radius must hold a few thousand cells before the 1% claim is meaningful
    // (at ~70 sites a single boundary site is already 1.4%)
    const Lattice sq = make_lattice({two_pi, 0}, {0, two_pi});
    const double radius = 30.0 * two_pi;
    const auto sites = enumerate_sites(sq, radius);
    const double estimate = M_PI * radius * radius / sq.cell_area;
    CHECK(std::abs(double(sites.size()) - estimate) / estimate < 0.01);
}
