#include <doctest.h>

#include <cmath>
#include <random>

#include "mbl/effective.hpp"
#include "mbl/spectral.hpp"

using namespace mbl;

namespace {

const Lattice unit = make_lattice({1, 0}, {0, 1});

HoppingSet harper_hoppings() {
    HoppingSet h;
    h.lat = unit;
    h.entries[{1, 0}] = -1.0;
    h.entries[{-1, 0}] = -1.0;
    h.entries[{0, 1}] = -1.0;
    h.entries[{0, -1}] = -1.0;
    h.trunc_radius = 1.1;
    return h;
}

} // namespace

TEST_CASE("rational flux detection") {
    FieldSpec f = make_field(two_pi, {});
    CHECK(rational_flux_p(1.0 / 16.0, f.B0, unit, 16).value() == 1);
    CHECK(rational_flux_p(3.0 / 16.0, f.B0, unit, 16).value() == 3);
    CHECK(!rational_flux_p(0.0613, f.B0, unit, 16).has_value());
}

TEST_CASE("torus at zero flux reproduces the band on the reciprocal grid") {
    HoppingSet h = harper_hoppings();
    FieldSpec f = make_field(0.0, {});
    const int q = 16;
    PeierlsMatrix pm = build_effective_matrix(h, unit, f, 0.0, 0.0, TorusGeometry{q});
    CHECK(pm.dim() == q * q);
    CHECK(pm.hermitian_defect() < 1e-12);

    EigenResult er = eigens(pm.M, -1, false, 4096);
    std::vector<double> expect;
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
            expect.push_back(-2.0 * std::cos(two_pi * a / q) - 2.0 * std::cos(two_pi * b / q));
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < pm.dim(); ++i)
        CHECK(er.values(i) == doctest::Approx(expect[i]).epsilon(1e-10));

    // block path agrees with the dense solve
    std::vector<double> blocks = torus_spectrum(h, unit, f, 0.0, q);
    for (int i = 0; i < pm.dim(); ++i)
        CHECK(blocks[i] == doctest::Approx(er.values(i)).epsilon(1e-10));
}

TEST_CASE("torus block spectrum equals dense spectrum at rational flux") {
    HoppingSet h = harper_hoppings();
    h.entries[{1, 1}] = cplx(-0.2, 0.05); // longer-range complex hop
    h.entries[{-1, -1}] = cplx(-0.2, -0.05);
    FieldSpec f = make_field(two_pi, {});
    const int q = 12;
    const double eps = 1.0 / q;
    PeierlsMatrix pm = build_effective_matrix(h, unit, f, eps, 0.0, TorusGeometry{q});
    CHECK(pm.hermitian_defect() < 1e-12);
    EigenResult er = eigens(pm.M, -1, false, 4096);
    std::vector<double> blocks = torus_spectrum(h, unit, f, eps, q);
    REQUIRE(blocks.size() == static_cast<std::size_t>(pm.dim()));
    for (int i = 0; i < pm.dim(); ++i)
        CHECK(blocks[i] == doctest::Approx(er.values(i)).epsilon(1e-9));
}

TEST_CASE("torus guards") {
    HoppingSet h = harper_hoppings();
    FieldSpec f = make_field(two_pi, {});
    CHECK_THROWS_WITH_AS(
        build_effective_matrix(h, unit, f, 0.0613, 0.0, TorusGeometry{16}),
        doctest::Contains("IrrationalFluxOnTorus"), Error);
    CHECK_THROWS_WITH_AS(
        build_effective_matrix(h, unit, f, 1.0 / 16.0, 0.3, TorusGeometry{16}),
        doctest::Contains("KappaOnTorus"), Error);
}

TEST_CASE("ball matrix: hermiticity and gauge invariance of the spectrum") {
    HoppingSet h = harper_hoppings();
    h.entries[{1, 1}] = cplx(-0.15, 0.1);
    h.entries[{-1, -1}] = cplx(-0.15, -0.1);
    FieldSpec f = make_field(two_pi, {{Vec2{1.3, 0.4}, 0.8, 0.3}});
    PeierlsMatrix pm = build_effective_matrix(h, unit, f, 0.05, 0.4, BallGeometry{6.0});
    CHECK(pm.hermitian_defect() < 1e-12);

    EigenResult base = eigens(pm.M, -1, false, 4096);

    // diagonal unitary conjugation leaves the spectrum untouched
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uni(0.0, two_pi);
    Eigen::VectorXcd d(pm.dim());
    for (int i = 0; i < pm.dim(); ++i) d(i) = std::polar(1.0, uni(rng));
    Eigen::SparseMatrix<cplx> conj_m = pm.M;
    for (int k = 0; k < conj_m.outerSize(); ++k)
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(conj_m, k); it; ++it)
            it.valueRef() = d(it.row()) * it.value() * std::conj(d(it.col()));
    EigenResult conj_e = eigens(conj_m, -1, false, 4096);
    for (int i = 0; i < pm.dim(); ++i)
        CHECK(conj_e.values(i) == doctest::Approx(base.values(i)).epsilon(1e-10));
}

TEST_CASE("quasi bloch: closed form, round trip and harmonic data") {
    HoppingSet h;
    h.lat = unit;
    h.entries[{0, 0}] = 2.0;
    h.entries[{1, 0}] = -0.5;
    h.entries[{-1, 0}] = -0.5;
    h.entries[{0, 1}] = -0.5;
    h.entries[{0, -1}] = -0.5;
    QuasiBlochData qb = quasi_bloch(h, unit, 16);
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const Vec2 th = qb.grid.theta(a, b);
            CHECK(qb.lambda[qb.grid.flat(a, b)] ==
                  doctest::Approx(2.0 - std::cos(th.x) - std::cos(th.y)).epsilon(1e-12));
        }
    CHECK(qb.max_imag < 1e-12);
    const HarmonicData hd = harmonic_data(qb);
    CHECK(hd.m == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(hd.theta_min.norm() < 1e-10);

    // evenness of lambda on the grid for real symmetric hoppings
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const int ra = (16 - a) % 16, rb = (16 - b) % 16;
            CHECK(qb.lambda[qb.grid.flat(a, b)] ==
                  doctest::Approx(qb.lambda[qb.grid.flat(ra, rb)]).epsilon(1e-8));
        }
}

TEST_CASE("quasi bloch rejects asymmetric hoppings") {
    HoppingSet h;
    h.lat = unit;
    h.entries[{1, 0}] = cplx(0.3, 0.2); // no conjugate partner
    CHECK_THROWS_AS(quasi_bloch(h, unit, 16), Error);
}

TEST_CASE("landau prediction formula") {
    HarmonicData hd;
    hd.m = 1.0;
    hd.min_value = 0.0;
    auto c = landau_prediction(hd, 1.0, 0.01, 2);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(0.05).epsilon(1e-14));

    hd.m = 0.5;
    hd.min_value = -4.0;
    auto c2 = landau_prediction(hd, 1.0, 0.02, 1);
    CHECK(c2[0] == doctest::Approx(-3.99).epsilon(1e-14));
    CHECK(c2[1] == doctest::Approx(-3.97).epsilon(1e-14));

    hd.min_value = -1.0;
    auto c3 = landau_prediction(hd, 1.0, 0.0, 2);
    for (double v : c3) CHECK(v == doctest::Approx(-1.0));
}

TEST_CASE("torus and filtered ball agree on the bottom window") {
    HoppingSet h = harper_hoppings();
    FieldSpec f = make_field(two_pi, {});
    const int q = 24;
    const double eps = 1.0 / q;

    std::vector<double> torus = torus_spectrum(h, unit, f, eps, q);

    const double radius = 10.0 / std::sqrt(eps * f.B0);
    PeierlsMatrix pm = build_effective_matrix(h, unit, f, eps, 0.0, BallGeometry{radius});
    EigenResult er = eigens(pm.M, -1, true, 4096);
    std::vector<double> vals(er.values.data(), er.values.data() + er.values.size());
    BulkFilterResult bf = bulk_filter(vals, er.vectors, pm.sites, radius, 0.15, 1e-8);

    const double spacing = 2.0 * eps * f.B0; // m = 1
    Interval window{-4.0 - 0.45 * spacing, -4.0 + 4.0 * eps * f.B0 + 0.45 * spacing};
    HausdorffResult hd = hausdorff(bf.values, torus, window);
    CHECK(!hd.one_empty);
    // both spectra sit on the same Landau clusters; the discrepancy is far
    // below the island spacing (5x measured island width criterion)
    SpectrumReport rep = detect_islands(torus, 0.25 * spacing, window);
    double max_width = 0.0;
    for (const auto& is : rep.islands) max_width = std::max(max_width, is.length());
    CHECK(hd.value <= std::max(5.0 * max_width, 1e-6 * spacing));
}

TEST_CASE("torus spectra are bitwise reproducible") {
    HoppingSet h = harper_hoppings();
    FieldSpec f = make_field(two_pi, {});
    std::vector<double> a = torus_spectrum(h, unit, f, 1.0 / 20.0, 20, 2);
    std::vector<double> b = torus_spectrum(h, unit, f, 1.0 / 20.0, 20, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
