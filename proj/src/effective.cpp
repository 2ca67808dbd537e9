#include "mbl/effective.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mbl/threading.hpp"

namespace mbl {

double PeierlsMatrix::hermitian_defect() const {
    Eigen::SparseMatrix<cplx> D = Eigen::SparseMatrix<cplx>(M.adjoint()) - M;
    double worst = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(D, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    return worst;
}

std::optional<int> rational_flux_p(double eps, double B0, const Lattice& lat, int q) {
    const double flux = eps * B0 * lat.cell_area;
    const double p = flux * q / two_pi;
    const double pr = std::round(p);
    if (std::abs(p - pr) <= 1e-9 * std::max(1.0, std::abs(p))) return static_cast<int>(pr);
    return std::nullopt;
}

namespace {

// Landau-gauge phase for the hop n -> n+d on the integer torus with flux
// `flux` per unit cell: exp(-i flux d2 (n1 + d1/2)). Rational flux makes the
// assignment single-valued for representatives n1 in [0, q).
cplx torus_hop_phase(double flux, int n1, IntPair d) {
    return std::polar(1.0, -flux * d.b * (n1 + 0.5 * d.a));
}

} // namespace

PeierlsMatrix build_effective_matrix(const HoppingSet& h, const Lattice& lat,
                                     const FieldSpec& field, double eps, double kappa,
                                     const Geometry& geom) {
    PeierlsMatrix pm;
    pm.eps = eps;
    pm.kappa = kappa;
    pm.geometry = geom;
    pm.hoppings = h;

    if (std::holds_alternative<TorusGeometry>(geom)) {
        const int q = std::get<TorusGeometry>(geom).q;
        if (q <= 0) fail("BadArgument", "torus: q must be positive");
        if (kappa != 0.0)
            fail("KappaOnTorus", "the slow profile is incommensurate with a torus");
        const auto p = rational_flux_p(eps, field.B0, lat, q);
        if (!p)
            fail("IrrationalFluxOnTorus",
                 "eps*B0*|E| must be 2*pi*p/q for integer p at the given q");
        const double flux = eps * field.B0 * lat.cell_area;

        pm.sites.reserve(static_cast<std::size_t>(q) * q);
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b)
                pm.sites.push_back({{a, b}, lat.site_position({a, b})});

        // M[n, n-gamma] = Lambda(n, n-gamma) h(gamma) in the Landau gauge
        std::vector<Eigen::Triplet<cplx>> trips;
        trips.reserve(pm.sites.size() * h.entries.size());
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) {
                const int row = a * q + b;
                for (const auto& [g, hv] : h.entries) {
                    if (std::abs(g.a) >= q || std::abs(g.b) >= q)
                        fail("BadArgument", "hop range exceeds the torus size");
                    const int a2 = ((a - g.a) % q + q) % q;
                    const int b2 = ((b - g.b) % q + q) % q;
                    trips.emplace_back(row, a2 * q + b2,
                                       torus_hop_phase(flux, a, {-g.a, -g.b}) * hv);
                }
            }
        pm.M.resize(q * q, q * q);
        pm.M.setFromTriplets(trips.begin(), trips.end());
        return pm;
    }

    const double radius = std::get<BallGeometry>(geom).radius;
    pm.sites = enumerate_sites(lat, radius);
    const int n = static_cast<int>(pm.sites.size());
    std::unordered_map<long long, int> index;
    index.reserve(pm.sites.size());
    auto key = [](IntPair g) {
        return (static_cast<long long>(g.a) << 32) ^ (static_cast<unsigned int>(g.b));
    };
    for (int i = 0; i < n; ++i) index[key(pm.sites[i].index)] = i;

    // row-block assembly; phases computed once per ordered pair (i <= j)
    std::vector<std::vector<Eigen::Triplet<cplx>>> rows(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const IntPair a = pm.sites[i].index;
        auto& out = rows[i];
        for (const auto& [d, hv] : h.entries) {
            const IntPair b{a.a - d.a, a.b - d.b}; // M[a,b] = Lambda(a,b) h(a-b)
            auto it = index.find(key(b));
            if (it == index.end()) continue;
            const int j = it->second;
            if (j < static_cast<int>(i)) continue; // fill upper triangle + diagonal
            const cplx lam = peierls_phase(field, pm.sites[i].position,
                                           pm.sites[j].position, eps, kappa);
            out.emplace_back(static_cast<int>(i), j, lam * hv);
        }
    });
    std::vector<Eigen::Triplet<cplx>> trips;
    for (const auto& r : rows)
        for (const auto& t : r) {
            trips.push_back(t);
            if (t.row() != t.col())
                trips.emplace_back(t.col(), t.row(), std::conj(t.value()));
        }
    pm.M.resize(n, n);
    pm.M.setFromTriplets(trips.begin(), trips.end());
    return pm;
}

std::vector<double> torus_spectrum(const HoppingSet& h, const Lattice& lat,
                                   const FieldSpec& field, double eps, int q,
                                   int cells) {
    if (q <= 0 || cells <= 0) fail("BadArgument", "torus_spectrum: bad size");
    const auto p = rational_flux_p(eps, field.B0, lat, q);
    if (!p)
        fail("IrrationalFluxOnTorus",
             "eps*B0*|E| must be 2*pi*p/q for integer p at the given q");
    const double flux = eps * field.B0 * lat.cell_area;
    const int n1 = cells * q;
    for (const auto& [d, hv] : h.entries)
        if (std::abs(d.a) >= n1 || std::abs(d.b) >= q)
            fail("BadArgument", "hop range exceeds the torus size");

    // The Landau-gauge phase depends on n only through n1, so a Fourier
    // transform in n2 decouples the matrix into q blocks of dimension n1:
    // H(k2)[a, a-g1] += h(g) exp(i flux g2 (a - g1/2)) exp(-i k2 g2).
    std::vector<std::vector<double>> per_block(q);
    parallel_for(static_cast<std::size_t>(q), [&](std::size_t kb) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n1, n1);
        const double k2 = two_pi * static_cast<double>(kb) / q;
        for (int a = 0; a < n1; ++a)
            for (const auto& [g, hv] : h.entries) {
                const int a2 = ((a - g.a) % n1 + n1) % n1;
                H(a, a2) += hv * torus_hop_phase(flux, a, {-g.a, -g.b}) *
                            std::polar(1.0, -k2 * g.b);
            }
        H = (H + H.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        per_block[kb].assign(es.eigenvalues().data(), es.eigenvalues().data() + n1);
    });
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(n1) * q);
    for (const auto& blk : per_block) all.insert(all.end(), blk.begin(), blk.end());
    std::sort(all.begin(), all.end());
    return all;
}

QuasiBlochData quasi_bloch(const HoppingSet& h, const Lattice& lat, int grid_n,
                           std::span<const double> lambda0_reference, double eps_for_rho) {
    if (h.hermitian_defect() > 1e-8)
        fail("BadArgument", "quasi_bloch: hoppings violate hermitian symmetry");
    QuasiBlochData qd;
    qd.grid = ThetaGrid{lat, grid_n};
    qd.lambda.resize(qd.grid.size());
    double max_imag = 0.0;
    for (int i1 = 0; i1 < grid_n; ++i1)
        for (int i2 = 0; i2 < grid_n; ++i2) {
            const Vec2 theta = qd.grid.theta(i1, i2);
            cplx acc(0, 0);
            for (const auto& [g, hv] : h.entries)
                acc += hv * std::polar(1.0, -dot(theta, lat.site_position(g)));
            max_imag = std::max(max_imag, std::abs(acc.imag()));
            qd.lambda[qd.grid.flat(i1, i2)] = acc.real();
        }
    qd.max_imag = max_imag;
    if (max_imag > 1e-6)
        fail("ComplexQuasiBloch", "imaginary part " + std::to_string(max_imag) +
                                      " signals asymmetric hoppings");
    qd.harmonic = band_minimum_hessian(qd.lambda, qd.grid);
    if (!lambda0_reference.empty()) {
        if (lambda0_reference.size() != qd.lambda.size() || eps_for_rho == 0.0)
            fail("BadArgument", "quasi_bloch: bad rho reference");
        qd.rho.resize(qd.lambda.size());
        for (std::size_t i = 0; i < qd.lambda.size(); ++i)
            qd.rho[i] = (qd.lambda[i] - lambda0_reference[i]) / eps_for_rho;
    }
    return qd;
}

HarmonicData harmonic_data(const QuasiBlochData& q) { return q.harmonic; }

std::vector<double> landau_prediction(const HarmonicData& hd, double B0, double eps,
                                      int N) {
    if (N < 0) fail("BadArgument", "landau_prediction: N must be >= 0");
    std::vector<double> centers(N + 1);
    for (int n = 0; n <= N; ++n)
        centers[n] = hd.min_value + (2.0 * n + 1.0) * eps * hd.m * B0;
    return centers;
}

} // namespace mbl
