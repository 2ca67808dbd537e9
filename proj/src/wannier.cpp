#include "mbl/wannier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mbl/fft.hpp"
#include "mbl/numerics.hpp"
#include "mbl/threading.hpp"

namespace mbl {

double HoppingSet::hermitian_defect() const {
    double worst = 0.0;
    for (const auto& [g, v] : entries) {
        auto it = entries.find({-g.a, -g.b});
        const cplx other = it == entries.end() ? cplx(0, 0) : it->second;
        worst = std::max(worst, std::abs(std::conj(other) - v));
    }
    return worst;
}

void HoppingSet::hermitian_symmetrize() {
    std::map<IntPair, cplx> out;
    for (const auto& [g, v] : entries) {
        auto it = entries.find({-g.a, -g.b});
        const cplx other = it == entries.end() ? cplx(0, 0) : it->second;
        out[g] = (v + std::conj(other)) / 2.0;
    }
    entries = std::move(out);
}

namespace {

// Center of the potential well (grid argmin over the elementary cell); the
// trial gauge localizes the Wannier function there.
Vec2 well_center(const PotentialSpec& pot, const Lattice& lat) {
    if (pot.empty()) return {0.0, 0.0};
    const int K = 64;
    double best = 1e300;
    Vec2 arg{0, 0};
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            const double s1 = (a - K / 2) / double(K), s2 = (b - K / 2) / double(K);
            const Vec2 x = lat.e1 * s1 + lat.e2 * s2;
            const double v = pot.value(lat, x);
            if (v < best) {
                best = v;
                arg = {s1, s2};
            }
        }
    return lat.e1 * arg.x + lat.e2 * arg.y;
}

} // namespace

BandStructure fix_gauge(const BandStructure& bs) {
    if (bs.vectors.empty()) fail("BadArgument", "fix_gauge: band structure lacks vectors");
    BandStructure out = bs;
    const int n = out.grid.n;
    const int cut = out.cutoff;
    const int w = 2 * cut + 1;

    // Trial-projection gauge: align each eigenvector with the Bloch transform
    // of a Gaussian sitting at the potential well. The trial coefficients
    // t_g(theta) = exp(-sigma^2 k^2/2) exp(-i<k, x_c>) with k = gamma*(g)+theta
    // depend only on the total wave vector, so they are smooth in theta and
    // exactly covariant under the zone-boundary index shift; a theta=0
    // reference gauge is neither when the well sits away from the origin.
    const Vec2 xc = well_center(out.potential, out.grid.lat);
    const double edge = std::max(out.grid.lat.e1.norm(), out.grid.lat.e2.norm());
    const double sigma = edge / 4.0;

    bool degenerate = false;
    std::vector<cplx> overlaps(out.grid.size());
    for (int i1 = 0; i1 < n && !degenerate; ++i1)
        for (int i2 = 0; i2 < n; ++i2) {
            const std::size_t idx = out.grid.flat(i1, i2);
            const Vec2 theta = out.grid.theta(i1, i2);
            const Eigen::VectorXcd& v = out.vectors[idx];
            cplx s(0, 0);
            for (int ga = -cut; ga <= cut; ++ga)
                for (int gb = -cut; gb <= cut; ++gb) {
                    const Vec2 k = theta + out.grid.lat.dual_vector({ga, gb});
                    const double env = std::exp(-sigma * sigma * k.norm2() / 2.0);
                    if (env < 1e-14) continue;
                    const cplx t = env * std::polar(1.0, -dot(k, xc));
                    s += std::conj(t) * v((ga + cut) * w + (gb + cut));
                }
            overlaps[idx] = s;
            if (std::abs(s) < 1e-6) {
                degenerate = true;
                break;
            }
        }

    if (!degenerate) {
        for (std::size_t i = 0; i < out.grid.size(); ++i) {
            const cplx s = overlaps[i];
            out.vectors[i] *= std::conj(s) / std::abs(s);
        }
    } else {
        // canonicalize the root phase, then transport outward
        {
            Eigen::VectorXcd& r = out.vectors.at(out.grid.center_index());
            Eigen::Index arg = 0;
            r.cwiseAbs().maxCoeff(&arg);
            const cplx piv = r(arg);
            if (std::abs(piv) < 1e-12)
                fail("GaugeReferenceDegenerate", "reference eigenvector is null");
            r *= std::conj(piv) / std::abs(piv);
        }
        // parallel transport along a BFS tree from the grid center
        std::vector<char> seen(out.grid.size(), 0);
        std::deque<std::size_t> queue;
        const std::size_t root = out.grid.center_index();
        seen[root] = 1;
        queue.push_back(root);
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            const int i1 = static_cast<int>(cur) / n;
            const int i2 = static_cast<int>(cur) % n;
            const int d1[4] = {1, -1, 0, 0};
            const int d2[4] = {0, 0, 1, -1};
            for (int e = 0; e < 4; ++e) {
                const int a = i1 + d1[e], b = i2 + d2[e];
                if (a < 0 || a >= n || b < 0 || b >= n) continue;
                const std::size_t nb = out.grid.flat(a, b);
                if (seen[nb]) continue;
                seen[nb] = 1;
                const cplx s = out.vectors[cur].dot(out.vectors[nb]);
                if (std::abs(s) < 1e-6)
                    fail("GaugeReferenceDegenerate",
                         "parallel transport stalled: adjacent overlap below 1e-6");
                out.vectors[nb] *= std::conj(s) / std::abs(s);
                queue.push_back(nb);
            }
        }
    }

    double min_adj = 1.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const std::size_t i = out.grid.flat(a, b);
            if (a + 1 < n)
                min_adj = std::min(min_adj,
                                   std::abs(out.vectors[i].dot(out.vectors[out.grid.flat(a + 1, b)])));
            if (b + 1 < n)
                min_adj = std::min(min_adj,
                                   std::abs(out.vectors[i].dot(out.vectors[out.grid.flat(a, b + 1)])));
        }
    out.min_adjacent_overlap = min_adj;
    out.gauge_fixed = true;
    return out;
}

namespace {

int next_pow2(int v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

} // namespace

WannierFunction synthesize_wannier(const BandStructure& bs, const Lattice& lat,
                                   double R_w, double spacing) {
    if (!bs.gauge_fixed) fail("BadArgument", "synthesize_wannier: gauge must be fixed first");
    if (bs.vectors.empty()) fail("BadArgument", "synthesize_wannier: missing vectors");
    const int N = bs.grid.n;
    if (!is_pow2(N)) fail("BadArgument", "synthesize_wannier: grid_n must be a power of two");

    const double edge = std::max(lat.e1.norm(), lat.e2.norm());
    int K = next_pow2(std::max(2, static_cast<int>(std::lround(edge / spacing))));
    const int P = N * K;

    // window: |m e1 + n e2|/K <= R_w  =>  |m| <= R_w K |dual1| / (2 pi)
    const int M = static_cast<int>(std::ceil(
                      R_w * K * std::max(lat.dual1.norm(), lat.dual2.norm()) / two_pi)) + 1;
    if (2 * M + 1 > P)
        fail("BadArgument", "synthesize_wannier: R_w exceeds half the supercell period; "
                            "increase grid_n or reduce R_w");

    const int cut = bs.cutoff;
    const int w = 2 * cut + 1;

    // accumulate plane-wave amplitudes on the padded frequency grid:
    // phi(x) = N^{-2} sum_theta e^{i<theta,x>} u_theta(x), so the component
    // of coefficient g at theta(i1,i2) lands on the total wave vector
    // gamma*(g) + theta, i.e. the padded frequency (N g + i - N/2) mod NK
    std::vector<cplx> A(static_cast<std::size_t>(P) * P, cplx(0, 0));
    const double norm = 1.0 / (std::sqrt(lat.cell_area) * N * N);
    for (int i1 = 0; i1 < N; ++i1)
        for (int i2 = 0; i2 < N; ++i2) {
            const Eigen::VectorXcd& c = bs.vectors[bs.grid.flat(i1, i2)];
            for (int ga = -cut; ga <= cut; ++ga) {
                const int p = ((N * ga + i1 - N / 2) % P + P) % P;
                for (int gb = -cut; gb <= cut; ++gb) {
                    const int q = ((N * gb + i2 - N / 2) % P + P) % P;
                    A[static_cast<std::size_t>(p) * P + q] +=
                        c((ga + cut) * w + (gb + cut)) * norm;
                }
            }
        }
    fft_2d(A, P, P, true); // inverse transform carries 1/P^2; undo it
    const double scale = static_cast<double>(P) * P;

    // the discrete norm over the full supercell period is exactly 1 unless
    // the spatial grid aliases plane-wave products (grid too coarse)
    double full_norm = 0.0;
    for (const cplx& v : A) full_norm += std::norm(v);
    full_norm *= scale * scale * lat.cell_area / (static_cast<double>(K) * K);
    if (std::abs(full_norm - 1.0) > 1e-3)
        fail("NormLoss", "supercell quadrature norm " + std::to_string(full_norm) +
                             " deviates from 1 (spatial grid too coarse)");

    WannierFunction wf;
    wf.lat = lat;
    wf.K = K;
    wf.M = M;
    wf.R_w = R_w;
    wf.cell_measure = lat.cell_area / (static_cast<double>(K) * K);
    wf.values.assign(static_cast<std::size_t>(wf.side()) * wf.side(), cplx(0, 0));
    for (int m = -M; m <= M; ++m)
        for (int n = -M; n <= M; ++n) {
            if (wf.position(m, n).norm() > R_w) continue;
            const int pm = ((m % P) + P) % P;
            const int pn = ((n % P) + P) % P;
            wf.values[wf.flat(m, n)] = A[static_cast<std::size_t>(pm) * P + pn] * scale;
        }

    double nrm2 = 0.0;
    for (const cplx& v : wf.values) nrm2 += std::norm(v);
    nrm2 *= wf.cell_measure;
    if (!(nrm2 > 0.5))
        fail("NormLoss", "disk window holds " + std::to_string(nrm2) +
                             " of the mass; increase R_w");
    const double inv = 1.0 / std::sqrt(nrm2);
    for (cplx& v : wf.values) v *= inv;

    // exponential-decay fit on shell maxima of |phi|, restricted to the
    // decaying flank between the peak shell and the numerical floor
    const double shell_w = edge / 2.0;
    const int nshell = static_cast<int>(std::floor(R_w / shell_w));
    std::vector<double> shell_max(nshell, 0.0);
    for (int m = -M; m <= M; ++m)
        for (int n = -M; n <= M; ++n) {
            const double r = wf.position(m, n).norm();
            const int s = static_cast<int>(std::floor(r / shell_w));
            if (s >= 0 && s < nshell)
                shell_max[s] = std::max(shell_max[s], std::abs(wf.value_at(m, n)));
        }
    int speak = 0;
    for (int s = 1; s < nshell; ++s)
        if (shell_max[s] > shell_max[speak]) speak = s;
    std::vector<double> rs, ls;
    for (int s = speak + 1; s < nshell; ++s) {
        if (shell_max[s] < shell_max[speak] * 1e-7 || shell_max[s] < 1e-13) break;
        if (!ls.empty() && std::log(shell_max[s]) > ls.back()) break; // floor reached
        rs.push_back((s + 0.5) * shell_w);
        ls.push_back(std::log(shell_max[s]));
    }
    if (rs.size() >= 3) {
        const LineFit lf = line_fit(rs, ls);
        wf.decay_rate = -lf.slope;
        wf.decay_prefactor = std::exp(lf.intercept);
        const double range = *std::max_element(ls.begin(), ls.end()) -
                             *std::min_element(ls.begin(), ls.end());
        wf.decay_residual = range > 0 ? lf.residual / range : 0.0;
    } else if (rs.size() == 2) {
        wf.decay_rate = (ls[0] - ls[1]) / (rs[1] - rs[0]);
        wf.decay_prefactor = std::exp(ls[0] + wf.decay_rate * rs[0]);
        wf.decay_residual = 0.0;
    }
    return wf;
}

HoppingSet hoppings_from_band(std::span<const double> band0, const ThetaGrid& grid,
                              double trunc_tol) {
    const int N = grid.n;
    if (band0.size() != grid.size()) fail("BadArgument", "band grid size mismatch");

    // h(gamma) = N^{-2} sum_theta lambda(theta) e^{+i<theta,gamma>}
    std::vector<cplx> tbl(static_cast<std::size_t>(N) * N);
    for (int a = 0; a < N; ++a)
        for (int i = 0; i < N; ++i)
            tbl[static_cast<std::size_t>(a) * N + i] =
                std::polar(1.0, two_pi * (i - N / 2) * (a - N / 2) / double(N));

    HoppingSet hs;
    hs.lat = grid.lat;
    hs.trunc_tol = trunc_tol;
    std::vector<std::pair<IntPair, cplx>> all(static_cast<std::size_t>(N) * N);
    parallel_for(static_cast<std::size_t>(N) * N, [&](std::size_t idx) {
        const int a = static_cast<int>(idx) / N; // gamma index offset by N/2
        const int b = static_cast<int>(idx) % N;
        cplx acc(0, 0);
        for (int i = 0; i < N; ++i) {
            cplx row(0, 0);
            const cplx* trow = &tbl[static_cast<std::size_t>(b) * N];
            for (int j = 0; j < N; ++j) row += band0[grid.flat(i, j)] * trow[j];
            acc += row * tbl[static_cast<std::size_t>(a) * N + i];
        }
        all[idx] = {IntPair{a - N / 2, b - N / 2}, acc / double(N * N)};
    });

    for (const auto& [g, v] : all) {
        const bool keep = (g.a == 0 && g.b == 0) || std::abs(v) >= trunc_tol;
        if (keep) {
            hs.entries[g] = v;
            hs.trunc_radius = std::max(hs.trunc_radius, grid.lat.site_position(g).norm());
        } else {
            hs.max_omitted = std::max(hs.max_omitted, std::abs(v));
        }
    }
    hs.hermitian_symmetrize();
    return hs;
}

GramianData magnetic_gramian(const WannierFunction& w, const std::vector<LatticeSite>& sites,
                             double eps, double kappa, const FieldSpec& field) {
    const int K = w.K, M = w.M;
    const int need = static_cast<int>(std::ceil(
        w.R_w * K * std::max(w.lat.dual1.norm(), w.lat.dual2.norm()) / two_pi));
    if (M < need)
        fail("QuadratureOverlapTruncated",
             "wannier grid window does not cover its own disk radius");
    const std::size_t ns = sites.size();
    GramianData gd;
    gd.sites = sites;
    gd.field = field;
    gd.eps = eps;
    gd.kappa = kappa;
    gd.G = Eigen::MatrixXcd::Zero(ns, ns);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = i; j < ns; ++j) pairs.push_back({i, j});

    std::vector<cplx> results(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t pi) {
        const auto [i, j] = pairs[pi];
        const IntPair ai = sites[i].index, bj = sites[j].index;
        const Vec2 pa = sites[i].position, pb = sites[j].position;
        // overlap window in grid indices
        const int lo_m = std::max(ai.a * K - M, bj.a * K - M);
        const int hi_m = std::min(ai.a * K + M, bj.a * K + M);
        const int lo_n = std::max(ai.b * K - M, bj.b * K - M);
        const int hi_n = std::min(ai.b * K + M, bj.b * K + M);
        cplx acc(0, 0);
        for (int m = lo_m; m <= hi_m; ++m)
            for (int n = lo_n; n <= hi_n; ++n) {
                const cplx wa = w.value_at(m - ai.a * K, n - ai.b * K);
                if (wa == cplx(0, 0)) continue;
                const cplx wb = w.value_at(m - bj.a * K, n - bj.b * K);
                if (wb == cplx(0, 0)) continue;
                const Vec2 x = w.position(m, n);
                const cplx la = peierls_phase(field, x, pa, eps, kappa);
                const cplx lb = peierls_phase(field, x, pb, eps, kappa);
                acc += std::conj(la * wa) * lb * wb;
            }
        results[pi] = acc * w.cell_measure;
    });
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        const auto [i, j] = pairs[pi];
        gd.G(i, j) = results[pi];
        gd.G(j, i) = std::conj(results[pi]);
    }
    for (std::size_t i = 0; i < ns; ++i) gd.G(i, i) = gd.G(i, i).real();

    gd.F = loewdin_inverse_sqrt(gd.G);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gd.G);
    gd.min_eigenvalue = es.eigenvalues()(0);
    return gd;
}

Eigen::MatrixXcd loewdin_inverse_sqrt(const Eigen::MatrixXcd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    if (es.eigenvalues()(0) <= 1e-10)
        fail("NearSingularGramian",
             "smallest Gramian eigenvalue " + std::to_string(es.eigenvalues()(0)));
    Eigen::VectorXd inv_sqrt = es.eigenvalues().array().rsqrt();
    Eigen::MatrixXcd F =
        es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    return (F + F.adjoint()) / 2.0;
}

HoppingSet magnetic_hoppings(const WannierFunction& w, const GramianData& gram,
                             const PotentialSpec& pot, const Lattice& lat, double eps,
                             double hop_radius, double trunc_tol,
                             const HoppingSet* band_reference) {
    if (gram.kappa != 0.0)
        fail("BadArgument", "magnetic_hoppings: gramian must be built at kappa = 0");
    const FieldSpec& field = gram.field;
    const double B0 = field.B0;

    const int K = w.K;
    int smax = 0;
    std::ptrdiff_t zero_idx = -1;
    for (std::size_t i = 0; i < gram.sites.size(); ++i) {
        smax = std::max({smax, std::abs(gram.sites[i].index.a),
                         std::abs(gram.sites[i].index.b)});
        if (gram.sites[i].index == IntPair{0, 0}) zero_idx = static_cast<std::ptrdiff_t>(i);
    }
    if (zero_idx < 0) fail("BadArgument", "magnetic_hoppings: site list must contain 0");

    // psi(x) = sum_alpha Fker(alpha) Lambda^eps(x, alpha) phi(x - alpha)
    const int Me = w.M + K * smax + 2;
    const int side = 2 * Me + 1;
    auto flat = [&](int m, int n) {
        return static_cast<std::size_t>(m + Me) * side + (n + Me);
    };
    auto pos = [&](int m, int n) {
        return (lat.e1 * double(m) + lat.e2 * double(n)) * (1.0 / K);
    };
    std::vector<cplx> psi(static_cast<std::size_t>(side) * side, cplx(0, 0));
    for (std::size_t si = 0; si < gram.sites.size(); ++si) {
        const IntPair a = gram.sites[si].index;
        const Vec2 pa = gram.sites[si].position;
        const cplx fker = std::conj(peierls_phase(field, pa, Vec2(0, 0), eps, 0.0)) *
                          gram.F(si, zero_idx);
        if (std::abs(fker) < 1e-15) continue;
        for (int dm = -w.M; dm <= w.M; ++dm)
            for (int dn = -w.M; dn <= w.M; ++dn) {
                const cplx wv = w.values[w.flat(dm, dn)];
                if (wv == cplx(0, 0)) continue;
                const int m = dm + a.a * K, n = dn + a.b * K;
                psi[flat(m, n)] +=
                    fker * peierls_phase(field, pos(m, n), pa, eps, 0.0) * wv;
            }
    }

    // H^eps psi = -Lap psi + 2 i eps A0.grad psi + eps^2 |A0|^2 psi + V psi,
    // derivatives by 4th-order stencils in lattice coordinates with the
    // inverse-metric correction (J = [e1|e2]/K).
    const double j11 = lat.e1.x / K, j21 = lat.e1.y / K;
    const double j12 = lat.e2.x / K, j22 = lat.e2.y / K;
    const double detj = j11 * j22 - j12 * j21;
    // J^{-1} rows
    const double i11 = j22 / detj, i12 = -j12 / detj;
    const double i21 = -j21 / detj, i22 = j11 / detj;
    // Ginv = J^{-1} J^{-T}
    const double g11 = i11 * i11 + i12 * i12;
    const double g12 = i11 * i21 + i12 * i22;
    const double g22 = i21 * i21 + i22 * i22;

    auto at = [&](const std::vector<cplx>& f, int m, int n) -> cplx {
        if (m < -Me || m > Me || n < -Me || n > Me) return cplx(0, 0);
        return f[flat(m, n)];
    };
    auto d1 = [&](const std::vector<cplx>& f, int m, int n) {
        return (-at(f, m + 2, n) + 8.0 * at(f, m + 1, n) - 8.0 * at(f, m - 1, n) +
                at(f, m - 2, n)) / 12.0;
    };
    auto d2 = [&](const std::vector<cplx>& f, int m, int n) {
        return (-at(f, m, n + 2) + 8.0 * at(f, m, n + 1) - 8.0 * at(f, m, n - 1) +
                at(f, m, n - 2)) / 12.0;
    };
    auto d11 = [&](const std::vector<cplx>& f, int m, int n) {
        return (-at(f, m + 2, n) + 16.0 * at(f, m + 1, n) - 30.0 * at(f, m, n) +
                16.0 * at(f, m - 1, n) - at(f, m - 2, n)) / 12.0;
    };
    auto d22 = [&](const std::vector<cplx>& f, int m, int n) {
        return (-at(f, m, n + 2) + 16.0 * at(f, m, n + 1) - 30.0 * at(f, m, n) +
                16.0 * at(f, m, n - 1) - at(f, m, n - 2)) / 12.0;
    };

    std::vector<cplx> psi_d2(psi.size());
    parallel_for(static_cast<std::size_t>(side), [&](std::size_t row) {
        const int m = static_cast<int>(row) - Me;
        for (int n = -Me; n <= Me; ++n) psi_d2[flat(m, n)] = d2(psi, m, n);
    });

    std::vector<cplx> hpsi(psi.size(), cplx(0, 0));
    parallel_for(static_cast<std::size_t>(side), [&](std::size_t row) {
        const int m = static_cast<int>(row) - Me;
        for (int n = -Me; n <= Me; ++n) {
            const cplx f1 = d1(psi, m, n);
            const cplx f2 = psi_d2[flat(m, n)];
            const cplx f11 = d11(psi, m, n);
            const cplx f22 = d22(psi, m, n);
            const cplx f12 = d1(psi_d2, m, n);
            const cplx lap = g11 * f11 + 2.0 * g12 * f12 + g22 * f22;
            // grad in cartesian coordinates
            const cplx gx = i11 * f1 + i21 * f2;
            const cplx gy = i12 * f1 + i22 * f2;
            const Vec2 x = pos(m, n);
            const Vec2 A0 = Vec2(-x.y, x.x) * (B0 / 2.0);
            const cplx val = psi[flat(m, n)];
            hpsi[flat(m, n)] = -lap + cplx(0, 2.0 * eps) * (A0.x * gx + A0.y * gy) +
                               (eps * eps * A0.norm2() + pot.value(lat, x)) * val;
        }
    });

    // h(gamma) = <psi, Lambda^eps(., gamma) tau_{-gamma} H psi>
    const std::vector<LatticeSite> hops = enumerate_sites(lat, hop_radius);
    std::vector<cplx> hvals(hops.size());
    parallel_for(hops.size(), [&](std::size_t hi) {
        const IntPair c = hops[hi].index;
        const Vec2 pc = hops[hi].position;
        cplx acc(0, 0);
        const int lo_m = std::max(-Me, c.a * K - Me + 2);
        const int hi_m = std::min(Me, c.a * K + Me - 2);
        const int lo_n = std::max(-Me, c.b * K - Me + 2);
        const int hi_n = std::min(Me, c.b * K + Me - 2);
        for (int m = lo_m; m <= hi_m; ++m)
            for (int n = lo_n; n <= hi_n; ++n) {
                const cplx pv = psi[flat(m, n)];
                if (pv == cplx(0, 0)) continue;
                const cplx hv = hpsi[flat(m - c.a * K, n - c.b * K)];
                if (hv == cplx(0, 0)) continue;
                acc += std::conj(pv) * peierls_phase(field, pos(m, n), pc, eps, 0.0) * hv;
            }
        hvals[hi] = acc * w.cell_measure;
    });

    HoppingSet hs;
    hs.lat = lat;
    hs.trunc_tol = trunc_tol;
    hs.trunc_radius = hop_radius;
    for (std::size_t hi = 0; hi < hops.size(); ++hi) {
        const IntPair g = hops[hi].index;
        if ((g.a == 0 && g.b == 0) || std::abs(hvals[hi]) >= trunc_tol)
            hs.entries[g] = hvals[hi];
        else
            hs.max_omitted = std::max(hs.max_omitted, std::abs(hvals[hi]));
    }
    hs.hermitian_symmetrize();

    if (band_reference != nullptr && eps == 0.0) {
        double worst = 0.0;
        for (const auto& [g, v] : hs.entries)
            worst = std::max(worst, std::abs(v - band_reference->value(g)));
        if (worst > 1e-4)
            fail("GridTooCoarse", "eps=0 hoppings deviate from the band transform by " +
                                      std::to_string(worst));
    }
    return hs;
}

} // namespace mbl
