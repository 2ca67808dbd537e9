#include <doctest.h>

#include <cmath>
#include <random>

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

Eigen::SparseMatrix<cplx> sparse_of(const Eigen::MatrixXcd& d) {
    Eigen::SparseMatrix<cplx> s(d.rows(), d.cols());
    std::vector<Eigen::Triplet<cplx>> t;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (std::abs(d(i, j)) > 0) t.emplace_back(i, j, d(i, j));
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

} // namespace

TEST_CASE("eigens: small closed forms") {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    d(2, 2) = 2.0;
    EigenResult er = eigens(sparse_of(d));
    CHECK(er.values(0) == doctest::Approx(1.0));
    CHECK(er.values(1) == doctest::Approx(2.0));
    CHECK(er.values(2) == doctest::Approx(3.0));

    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(2, 2);
    f(0, 1) = 1.0;
    f(1, 0) = 1.0;
    EigenResult er2 = eigens(sparse_of(f));
    CHECK(er2.values(0) == doctest::Approx(-1.0));
    CHECK(er2.values(1) == doctest::Approx(1.0));
}

TEST_CASE("eigens: iterative bottom-k agrees with dense") {
    std::mt19937 rng(41);
    std::normal_distribution<double> g;
    const int n = 200, k = 20;
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
    Eigen::MatrixXcd h = (a + a.adjoint()) / 2.0;
    Eigen::SparseMatrix<cplx> s = sparse_of(h);

    EigenResult dense = eigens(s, -1, false, 4096);
    EigenResult iter = eigens(s, k, true, 16); // force the Lanczos path
    for (int i = 0; i < k; ++i)
        CHECK(std::abs(iter.values(i) - dense.values(i)) < 1e-9);
    // vectors satisfy the eigen equation
    for (int i = 0; i < k; ++i) {
        const double r = (h * iter.vectors.col(i) - iter.values(i) * iter.vectors.col(i)).norm();
        CHECK(r < 1e-8);
    }
}

TEST_CASE("detect_islands: spec examples") {
    std::vector<double> eigs = {0.10, 0.11, 0.30, 0.31};
    Interval win{0.0, 1.0};
    SpectrumReport r = detect_islands(eigs, 0.05, win);
    REQUIRE(r.islands.size() == 2);
    CHECK(r.islands[0].lo == doctest::Approx(0.10));
    CHECK(r.islands[0].hi == doctest::Approx(0.11));
    CHECK(r.islands[1].lo == doctest::Approx(0.30));
    CHECK(r.islands[1].hi == doctest::Approx(0.31));
    REQUIRE(r.gaps.size() == 1);
    CHECK(r.gaps[0].lo == doctest::Approx(0.11));
    CHECK(r.gaps[0].hi == doctest::Approx(0.30));

    SpectrumReport one = detect_islands(std::vector<double>{0.5}, 0.05, win);
    REQUIRE(one.islands.size() == 1);
    CHECK(one.islands[0].length() == doctest::Approx(0.0));

    SpectrumReport merged = detect_islands(eigs, 1.0, win);
    CHECK(merged.islands.size() == 1);
    CHECK(merged.islands[0].lo == doctest::Approx(0.10));
    CHECK(merged.islands[0].hi == doctest::Approx(0.31));

    CHECK_THROWS_WITH_AS(detect_islands(eigs, 0.05, Interval{2.0, 3.0}),
                         doctest::Contains("EmptyWindow"), Error);

    // islands and gaps tile the covered range
    SpectrumReport t = detect_islands(eigs, 0.05, win);
    for (std::size_t i = 0; i + 1 < t.islands.size(); ++i) {
        CHECK(t.gaps[i].lo == doctest::Approx(t.islands[i].hi));
        CHECK(t.gaps[i].hi == doctest::Approx(t.islands[i + 1].lo));
        CHECK(t.gaps[i].length() > 0.0);
    }
}

TEST_CASE("bulk_filter: boundary weight rules") {
    const double radius = 10.0;
    std::vector<LatticeSite> sites = enumerate_sites(unit, radius);
    const int n = static_cast<int>(sites.size());
    int center = 0, outer_site = 0, n_outer = 0;
    for (int i = 0; i < n; ++i) {
        if (sites[i].position.norm() < 1e-12) center = i;
        if (sites[i].position.norm() > 0.8 * radius) {
            outer_site = i;
            ++n_outer;
        }
    }
    // a uniform state on the ball holds ~1 - 0.8^2 = 0.36 of its weight in
    // the outer annulus
    CHECK(double(n_outer) / n == doctest::Approx(0.36).epsilon(0.1));

    Eigen::MatrixXcd vecs = Eigen::MatrixXcd::Zero(n, 3);
    vecs(outer_site, 0) = 1.0; // entirely on the outer annulus
    for (int i = 0; i < n; ++i) vecs(i, 1) = 1.0 / std::sqrt(double(n)); // uniform
    vecs(center, 2) = 1.0; // concentrated at the center
    std::vector<double> vals = {1.0, 2.0, 3.0};
    BulkFilterResult res = bulk_filter(vals, vecs, sites, radius, 0.2, 0.2);
    REQUIRE(res.values.size() == 1);
    CHECK(res.values[0] == doctest::Approx(3.0));
    CHECK(res.removed == 2);

    // a state with zero boundary weight is never removed
    BulkFilterResult strict = bulk_filter(vals, vecs, sites, radius, 0.2, 0.0);
    bool kept_center = false;
    for (int i : strict.kept) kept_center = kept_center || (i == 2);
    CHECK(kept_center);
}

TEST_CASE("hausdorff: examples and metric properties") {
    Interval win{-1.0, 1.0};
    std::vector<double> a = {0.0}, b = {0.1};
    CHECK(hausdorff(a, a, win).value == doctest::Approx(0.0));
    CHECK(hausdorff(a, b, win).value == doctest::Approx(0.1));

    std::vector<double> c = {0.0, 5.0};
    CHECK(hausdorff(c, a, win).value == doctest::Approx(0.0)); // 5 outside window

    HausdorffResult empty_one = hausdorff(std::vector<double>{5.0}, a, win);
    CHECK(empty_one.one_empty);
    CHECK(std::isinf(empty_one.value));
    HausdorffResult empty_both =
        hausdorff(std::vector<double>{5.0}, std::vector<double>{-7.0}, win);
    CHECK(!empty_both.one_empty);
    CHECK(empty_both.value == doctest::Approx(0.0));

    // symmetry and triangle inequality on random finite sets
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto mk = [&](int sz) {
            std::vector<double> s(sz);
            for (auto& v : s) v = uni(rng);
            return s;
        };
        auto A = mk(3 + trial % 5), B = mk(2 + trial % 7), C = mk(4 + trial % 3);
        const double ab = hausdorff(A, B, win).value;
        const double ba = hausdorff(B, A, win).value;
        const double ac = hausdorff(A, C, win).value;
        const double cb = hausdorff(C, B, win).value;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= ac + cb + 1e-12);
    }
}

TEST_CASE("landau_cluster_check: synthetic and mismatch") {
    SpectrumReport rep;
    rep.window = {0.0, 1.0};
    rep.islands = {{0.095, 0.105}, {0.295, 0.305}, {0.495, 0.505}};
    std::vector<double> predicted = {0.1, 0.3, 0.5};
    auto dev = landau_cluster_check(rep, predicted, 0.2);
    REQUIRE(dev.size() == 3);
    for (double d : dev) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));

    rep.islands.pop_back();
    CHECK_THROWS_WITH_AS(landau_cluster_check(rep, predicted, 0.2),
                         doctest::Contains("IslandCountMismatch"), Error);
}

TEST_CASE("harper torus: landau clustering improves with flux") {
    HoppingSet h = harper_hoppings();
    FieldSpec f = make_field(two_pi, {});
    auto run = [&](int q) {
        const double eps = 1.0 / q;
        std::vector<double> vals = torus_spectrum(h, unit, f, eps, q);
        const double spacing = 2.0 * eps * f.B0;
        Interval win{-4.0 - 0.45 * spacing, -4.0 + 6.0 * eps * f.B0 + 0.45 * spacing};
        SpectrumReport rep = detect_islands(vals, 0.25 * spacing, win);
        std::vector<double> centers = {-4.0 + eps * f.B0, -4.0 + 3.0 * eps * f.B0,
                                       -4.0 + 5.0 * eps * f.B0};
        auto dev = landau_cluster_check(rep, centers, spacing);
        double worst = 0.0;
        for (double d : dev) worst = std::max(worst, d);
        return worst;
    };
    const double w64 = run(64);
    const double w128 = run(128);
    CHECK(w64 <= 0.15);
    CHECK(w128 <= 0.15);
    CHECK(w128 < w64);
}

TEST_CASE("perturbed landau: widths scale linearly in beta") {
    HoppingSet h = harper_hoppings();
    PerturbedLandauConfig cfg;
    cfg.hoppings = h;
    cfg.lat = unit;
    cfg.field = make_field(two_pi, {{Vec2{2.0, 1.0}, 0.05 * two_pi, 0.4}});
    cfg.eps = 0.05;
    cfg.kappas = {0.25, 0.5, 1.0};
    cfg.landau_n = 1;
    PerturbedLandauResult res = perturbed_landau_check(cfg);
    CHECK(res.zero_beta_width < 1e-6 * res.spacing);
    CHECK(res.width_fit.fit.exponent == doctest::Approx(1.0).epsilon(0.3));
    for (double d : res.center_dev) CHECK(d < 0.2);
}

TEST_CASE("scaling sweep: harper gap and width laws") {
    HoppingSet h = harper_hoppings();
    SweepSpec spec;
    spec.hoppings_for_eps = [&](double) { return h; };
    spec.lat = unit;
    spec.field = make_field(two_pi, {{Vec2{2.0, 1.0}, 0.05 * two_pi, 0.4}});
    spec.eps_list = {1.0 / 8.0, 1.0 / 12.0, 1.0 / 16.0};
    spec.kappa_list = {0.5, 1.0};
    spec.eps_fixed = 0.05;
    spec.landau_n = 2;
    spec.torus_cells = 8;
    SweepResult res = scaling_sweep(spec);

    REQUIRE(res.implied_c2.size() == 3);
    double cmin = 1e300, cmax = 0.0;
    for (double c : res.implied_c2) {
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax / cmin <= 2.0);

    bool found_width = false, found_gap = false;
    for (const auto& fit : res.fits) {
        if (fit.law == "island width ~ eps (kappa=0)") {
            found_width = true;
            CHECK(fit.fit.exponent >= 2.0);
        }
        if (fit.law == "min gap ~ eps") found_gap = true;
    }
    CHECK(found_width);
    CHECK(found_gap);
    for (const auto& cell : res.cells) CHECK(cell.status == "ok");
}
