#include "mbl/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mbl/eigsolve.hpp"
#include "mbl/numerics.hpp"
#include "mbl/threading.hpp"

namespace mbl {

PotentialSpec::PotentialSpec(std::map<IntPair, cplx> coeffs) : coeffs_(std::move(coeffs)) {
    for (const auto& [g, v] : coeffs_) {
        auto it = coeffs_.find(IntPair{-g.a, -g.b});
        if (it == coeffs_.end() || std::abs(std::conj(it->second) - v) > 1e-12)
            fail("ComplexPotential", "V(-g) must equal conj(V(g)); V is real-valued");
        support_ = std::max({support_, std::abs(g.a), std::abs(g.b)});
    }
}

cplx PotentialSpec::coefficient(IntPair g) const {
    auto it = coeffs_.find(g);
    return it == coeffs_.end() ? cplx(0.0, 0.0) : it->second;
}

double PotentialSpec::value(const Lattice& lat, const Vec2& x) const {
    cplx v(0.0, 0.0);
    for (const auto& [g, c] : coeffs_) v += c * std::polar(1.0, dot(lat.dual_vector(g), x));
    return v.real();
}

PotentialSpec separable_cosine_potential(double amplitude) {
    std::map<IntPair, cplx> m;
    m[{1, 0}] = amplitude;
    m[{-1, 0}] = amplitude;
    m[{0, 1}] = amplitude;
    m[{0, -1}] = amplitude;
    return PotentialSpec(std::move(m));
}

const char* to_string(HypothesisClass h) {
    switch (h) {
        case HypothesisClass::Gap: return "gap";
        case HypothesisClass::Overlap: return "overlap";
        case HypothesisClass::Crossing: return "crossing";
    }
    return "?";
}

FiberHamiltonian build_fiber_hamiltonian(const Vec2& theta, const PotentialSpec& pot,
                                         const Lattice& lat, int cutoff) {
    if (cutoff < 2 * pot.support_radius())
        fail("CutoffTooSmall", "cutoff must be >= twice the potential support radius");
    if (cutoff < 0) fail("BadArgument", "cutoff must be nonnegative");
    FiberHamiltonian fh;
    fh.theta = theta;
    fh.cutoff = cutoff;
    const int w = 2 * cutoff + 1;
    const int dim = w * w;
    fh.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const IntPair g = fh.g_of_index(i);
        fh.matrix(i, i) = (theta + lat.dual_vector(g)).norm2();
    }
    for (const auto& [dg, v] : pot.coefficients()) {
        if (dg.a == 0 && dg.b == 0) {
            for (int i = 0; i < dim; ++i) fh.matrix(i, i) += v.real();
            continue;
        }
        // matrix[g, g'] += V(g - g') for g - g' = dg
        for (int i = 0; i < dim; ++i) {
            const IntPair g = fh.g_of_index(i);
            const IntPair gp{g.a - dg.a, g.b - dg.b};
            if (std::abs(gp.a) <= cutoff && std::abs(gp.b) <= cutoff)
                fh.matrix(i, fh.g_index(gp)) += v;
        }
    }
    return fh;
}

namespace {

// Sparse fiber operator: diagonal |theta + gamma*(g)|^2 plus the fixed
// potential offsets. Cheap to re-diagonalize per theta.
struct FiberOperator {
    int cutoff;
    int w;
    int dim;
    Eigen::VectorXd diag;
    struct Off {
        int da, db;
        cplx v;
    };
    std::vector<Off> offs;

    void build(const Vec2& theta, const PotentialSpec& pot, const Lattice& lat, int cut) {
        cutoff = cut;
        w = 2 * cut + 1;
        dim = w * w;
        diag.resize(dim);
        for (int i = 0; i < dim; ++i) {
            const IntPair g{i / w - cut, i % w - cut};
            diag(i) = (theta + lat.dual_vector(g)).norm2();
        }
        offs.clear();
        for (const auto& [dg, v] : pot.coefficients()) {
            if (dg.a == 0 && dg.b == 0) {
                diag.array() += v.real();
                continue;
            }
            offs.push_back({dg.a, dg.b, v});
        }
    }

    void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
        out = diag.asDiagonal() * in;
        for (const auto& o : offs) {
            // out[g] += v * in[g - dg]
            const int lo_a = std::max(-cutoff, -cutoff + o.da);
            const int hi_a = std::min(cutoff, cutoff + o.da);
            for (int a = lo_a; a <= hi_a; ++a) {
                const int rowbase = (a + cutoff) * w;
                const int srcbase = (a - o.da + cutoff) * w;
                const int lo_b = std::max(-cutoff, -cutoff + o.db);
                const int hi_b = std::min(cutoff, cutoff + o.db);
                for (int bb = lo_b; bb <= hi_b; ++bb)
                    out(rowbase + bb + cutoff) += o.v * in(srcbase + bb - o.db + cutoff);
            }
        }
    }
};

struct FiberSolution {
    std::vector<double> values;
    Eigen::VectorXcd band0;
};

FiberSolution solve_fiber(const Vec2& theta, const PotentialSpec& pot, const Lattice& lat,
                          int cutoff, int nbands, bool want_vector) {
    FiberSolution sol;
    const int w = 2 * cutoff + 1;
    const int dim = w * w;
    if (pot.empty()) {
        // diagonal operator: exact eigenpairs
        std::vector<std::pair<double, int>> d(dim);
        for (int i = 0; i < dim; ++i) {
            const IntPair g{i / w - cutoff, i % w - cutoff};
            d[i] = {(theta + lat.dual_vector(g)).norm2(), i};
        }
        std::sort(d.begin(), d.end());
        sol.values.resize(nbands);
        for (int j = 0; j < nbands; ++j) sol.values[j] = d[j].first;
        if (want_vector) {
            sol.band0 = Eigen::VectorXcd::Zero(dim);
            sol.band0(d[0].second) = 1.0;
        }
        return sol;
    }

    FiberOperator op;
    op.build(theta, pot, lat, cutoff);
    if (dim <= 144) {
        Eigen::MatrixXcd H = build_fiber_hamiltonian(theta, pot, lat, cutoff).matrix;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        sol.values.resize(nbands);
        for (int j = 0; j < nbands; ++j) sol.values[j] = es.eigenvalues()(j);
        if (want_vector) sol.band0 = es.eigenvectors().col(0);
        return sol;
    }

    LanczosOptions lo;
    lo.block = std::max(2, std::min(nbands, 4));
    lo.tol = 1e-11;
    lo.want_vectors = want_vector;
    const int k = nbands + 2;
    LanczosResult lr = davidson_smallest(
        [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { op.apply(in, out); },
        op.diag, dim, k, lo);
    sol.values.assign(lr.values.data(), lr.values.data() + nbands);
    if (want_vector) sol.band0 = lr.vectors.col(0);
    return sol;
}

} // namespace

BandStructure solve_bands(const PotentialSpec& pot, const Lattice& lat, int grid_n,
                          int nbands, int cutoff, bool store_vectors) {
    if (grid_n < 8) fail("BadArgument", "solve_bands: grid_n must be >= 8");
    if (grid_n % 2 != 0) fail("BadArgument", "solve_bands: grid_n must be even");
    if (nbands < 2) fail("BadArgument", "solve_bands: nbands must be >= 2");

    BandStructure bs;
    bs.grid = ThetaGrid{lat, grid_n};
    bs.potential = pot;
    bs.cutoff = cutoff;
    bs.nbands = nbands;
    bs.bands.assign(nbands, std::vector<double>(bs.grid.size(), 0.0));
    if (store_vectors) bs.vectors.resize(bs.grid.size());

    parallel_for(bs.grid.size(), [&](std::size_t idx) {
        const int i1 = static_cast<int>(idx) / grid_n;
        const int i2 = static_cast<int>(idx) % grid_n;
        const Vec2 theta = bs.grid.theta(i1, i2);
        FiberSolution sol = solve_fiber(theta, pot, lat, cutoff, nbands, store_vectors);
        for (int j = 0; j < nbands; ++j) bs.bands[j][idx] = sol.values[j];
        if (store_vectors) bs.vectors[idx] = std::move(sol.band0);
    });
    return bs;
}

double default_classify_tol(const BandStructure& bs) {
    double scale = 1.0;
    for (int j = 0; j < std::min(bs.nbands, 2); ++j)
        for (double v : bs.bands[j]) scale = std::max(scale, std::abs(v));
    return 1e-9 * scale;
}

HypothesisClass classify_hypothesis(const BandStructure& bs, double tol) {
    if (bs.nbands < 2) fail("BadArgument", "classify_hypothesis: need >= 2 bands");
    double sup0 = -1e300, inf1 = 1e300, min_diff = 1e300;
    for (std::size_t i = 0; i < bs.grid.size(); ++i) {
        sup0 = std::max(sup0, bs.bands[0][i]);
        inf1 = std::min(inf1, bs.bands[1][i]);
        min_diff = std::min(min_diff, bs.bands[1][i] - bs.bands[0][i]);
    }
    if (min_diff <= tol) return HypothesisClass::Crossing;
    if (sup0 < inf1 - tol) return HypothesisClass::Gap;
    return HypothesisClass::Overlap;
}

HarmonicData band_minimum_hessian(std::span<const double> values, const ThetaGrid& grid) {
    const int n = grid.n;
    if (values.size() != grid.size()) fail("BadArgument", "band grid size mismatch");

    std::size_t arg = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[arg]) arg = i;
    const int i1 = static_cast<int>(arg) / n;
    const int i2 = static_cast<int>(arg) % n;
    if (i1 == 0 || i1 == n - 1 || i2 == 0 || i2 == n - 1)
        fail("MinimumOnGridBoundaryUnresolved", "grid argmin lies on the sampling edge");

    const Vec2 h1 = grid.lat.dual1 * (1.0 / n);
    const Vec2 h2 = grid.lat.dual2 * (1.0 / n);
    auto sample = [&](int da, int db) {
        const int a = (i1 + da % n + n) % n;
        const int b = (i2 + db % n + n) % n;
        return values[grid.flat(a, b)];
    };
    auto fit_stencil = [&](int step) {
        std::vector<Vec2> pts;
        std::vector<double> vals;
        for (int da = -1; da <= 1; ++da)
            for (int db = -1; db <= 1; ++db) {
                pts.push_back(h1 * double(da * step) + h2 * double(db * step));
                vals.push_back(sample(da * step, db * step));
            }
        return fit_quadratic_2d(pts, vals);
    };
    const QuadFit2D fh = fit_stencil(1);
    const QuadFit2D f2h = fit_stencil(2);
    // Richardson: both fits are exact for quadratics; the cubic/quartic bias is O(h^2)
    QuadFit2D f;
    f.c = (4.0 * fh.c - f2h.c) / 3.0;
    f.b = {(4.0 * fh.b.x - f2h.b.x) / 3.0, (4.0 * fh.b.y - f2h.b.y) / 3.0};
    f.q11 = (4.0 * fh.q11 - f2h.q11) / 3.0;
    f.q12 = (4.0 * fh.q12 - f2h.q12) / 3.0;
    f.q22 = (4.0 * fh.q22 - f2h.q22) / 3.0;

    const double det = f.q11 * f.q22 - f.q12 * f.q12;
    const double tr = f.q11 + f.q22;
    if (det <= 0.0 || tr <= 0.0)
        fail("NonPositiveHessian", "fitted quadratic form is not positive definite");

    // minimize c + <b,d> + d^T Q d  ->  d = -Q^{-1} b / 2
    const Vec2 d{-(f.q22 * f.b.x - f.q12 * f.b.y) / (2.0 * det),
                 -(f.q11 * f.b.y - f.q12 * f.b.x) / (2.0 * det)};

    HarmonicData hd;
    hd.theta_min = grid.theta(i1, i2) + d;
    hd.q11 = f.q11;
    hd.q12 = f.q12;
    hd.q22 = f.q22;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    hd.m1 = tr / 2.0 - disc;
    hd.m2 = tr / 2.0 + disc;
    hd.m = std::sqrt(hd.m1 * hd.m2);
    hd.min_value = f.c + dot(f.b, d) +
                   f.q11 * d.x * d.x + 2.0 * f.q12 * d.x * d.y + f.q22 * d.y * d.y;
    return hd;
}

GroundStateBound ground_state_bound_check(const PotentialSpec& pot, const Lattice& lat,
                                          const BandStructure& bs, int cutoff,
                                          int real_grid) {
    if (bs.vectors.empty()) fail("BadArgument", "band structure lacks eigenvectors");
    const std::size_t c0 = bs.grid.center_index();
    const Eigen::VectorXcd& coeff = bs.vectors.at(c0);
    if (coeff.size() == 0) fail("BadArgument", "missing eigenvector at theta=0");

    // synthesize u0 on a real-space grid over the elementary cell
    const int K = real_grid;
    const int w = 2 * cutoff + 1;
    Eigen::MatrixXcd E1(K, w), E2(w, K);
    for (int s = 0; s < K; ++s) {
        const double t = (s - K / 2) / double(K);
        for (int g = -cutoff; g <= cutoff; ++g) {
            E1(s, g + cutoff) = std::polar(1.0, two_pi * g * t);
            E2(g + cutoff, s) = std::polar(1.0, two_pi * g * t);
        }
    }
    Eigen::MatrixXcd C(w, w);
    for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b) C(a, b) = coeff(a * w + b);
    Eigen::MatrixXcd U = E1 * C * E2; // u0 at (s1, s2)

    // phase-fix at the max-modulus point; Perron-Frobenius positivity check
    Eigen::Index im = 0, jm = 0;
    U.cwiseAbs().maxCoeff(&im, &jm);
    const cplx ph = U(im, jm) / std::abs(U(im, jm));
    U /= ph;
    double umin = 1e300, umax = -1e300, imag_max = 0.0;
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            umin = std::min(umin, U(a, b).real());
            umax = std::max(umax, U(a, b).real());
            imag_max = std::max(imag_max, std::abs(U(a, b).imag()));
        }
    if (umin <= 0.0 || imag_max > 1e-8 * umax)
        fail("SignChangeInGroundState",
             "phase-fixed ground state is not strictly positive (increase cutoff)");

    GroundStateBound out;
    out.C = (umin / umax) * (umin / umax);

    const double lam00 = bs.bands[0][c0];
    double margin = 1e300;
    for (int a = 0; a < bs.grid.n; ++a)
        for (int b = 0; b < bs.grid.n; ++b) {
            const std::size_t i = bs.grid.flat(a, b);
            const double lhs = bs.bands[0][i] - lam00;
            const double rhs = out.C * bs.grid.theta(a, b).norm2();
            margin = std::min(margin, lhs - rhs);
        }
    out.margin = margin;
    double scale = std::max(1.0, std::abs(lam00));
    for (double v : bs.bands[0]) scale = std::max(scale, std::abs(v));
    out.holds = margin >= -1e-12 * scale;
    return out;
}

} // namespace mbl
