#include "mbl/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "mbl/eigsolve.hpp"

namespace mbl {

EigenResult eigens(const Eigen::SparseMatrix<cplx>& M, int k, bool want_vectors,
                   int dense_threshold) {
    if (M.rows() != M.cols()) fail("BadArgument", "eigens: matrix must be square");
    const int dim = static_cast<int>(M.rows());
    EigenResult out;
    if (k < 0 || dim <= dense_threshold || k >= dim) {
        Eigen::MatrixXcd D(M);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            D, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        const int take = k < 0 ? dim : std::min(k, dim);
        out.values = es.eigenvalues().head(take);
        if (want_vectors) out.vectors = es.eigenvectors().leftCols(take);
        return out;
    }
    LanczosOptions lo;
    lo.block = 8;
    lo.tol = 1e-11;
    lo.want_vectors = want_vectors;
    LanczosResult lr = lanczos_smallest(
        [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& v) { v = M * in; }, dim, k, lo);
    out.values = lr.values;
    if (want_vectors) out.vectors = lr.vectors;
    return out;
}

SpectrumReport detect_islands(std::span<const double> eigs, double gap_threshold,
                              Interval window) {
    if (!(gap_threshold > 0.0)) fail("BadArgument", "detect_islands: threshold must be > 0");
    SpectrumReport rep;
    rep.window = window;
    for (double v : eigs)
        if (window.contains(v)) rep.eigenvalues.push_back(v);
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());
    if (rep.eigenvalues.empty())
        fail("EmptyWindow", "no eigenvalues inside the analysis window");

    double lo = rep.eigenvalues.front(), hi = lo;
    for (std::size_t i = 1; i < rep.eigenvalues.size(); ++i) {
        const double v = rep.eigenvalues[i];
        if (v - hi > gap_threshold) {
            rep.islands.push_back({lo, hi});
            rep.gaps.push_back({hi, v});
            lo = v;
        }
        hi = v;
    }
    rep.islands.push_back({lo, hi});
    return rep;
}

BulkFilterResult bulk_filter(std::span<const double> values, const Eigen::MatrixXcd& vectors,
                             const std::vector<LatticeSite>& sites, double radius,
                             double boundary_frac, double weight_tol) {
    if (static_cast<std::size_t>(vectors.rows()) != sites.size() ||
        static_cast<std::size_t>(vectors.cols()) != values.size())
        fail("BadArgument", "bulk_filter: shape mismatch");
    const double rim = (1.0 - boundary_frac) * radius;
    std::vector<char> outer(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
        outer[i] = sites[i].position.norm() > rim ? 1 : 0;

    BulkFilterResult res;
    for (std::size_t j = 0; j < values.size(); ++j) {
        double wout = 0.0, wall = 0.0;
        for (std::size_t i = 0; i < sites.size(); ++i) {
            const double a2 = std::norm(vectors(i, j));
            wall += a2;
            if (outer[i]) wout += a2;
        }
        const double frac = wall > 0.0 ? wout / wall : 1.0;
        if (frac <= weight_tol) {
            res.values.push_back(values[j]);
            res.kept.push_back(static_cast<int>(j));
        } else {
            ++res.removed;
        }
    }
    std::sort(res.values.begin(), res.values.end());
    return res;
}

HausdorffResult hausdorff(std::span<const double> A, std::span<const double> B,
                          Interval window) {
    std::vector<double> a, b;
    for (double v : A)
        if (window.contains(v)) a.push_back(v);
    for (double v : B)
        if (window.contains(v)) b.push_back(v);
    HausdorffResult res;
    if (a.empty() && b.empty()) return res; // 0
    if (a.empty() || b.empty()) {
        res.one_empty = true;
        res.value = std::numeric_limits<double>::infinity();
        return res;
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
        double worst = 0.0;
        for (double v : from) {
            auto it = std::lower_bound(to.begin(), to.end(), v);
            double best = std::numeric_limits<double>::infinity();
            if (it != to.end()) best = std::min(best, std::abs(*it - v));
            if (it != to.begin()) best = std::min(best, std::abs(*(it - 1) - v));
            worst = std::max(worst, best);
        }
        return worst;
    };
    res.value = std::max(directed(a, b), directed(b, a));
    return res;
}

std::vector<double> landau_cluster_check(const SpectrumReport& report,
                                         std::span<const double> predicted,
                                         double spacing) {
    std::vector<double> in_window;
    for (double p : predicted)
        if (report.window.contains(p)) in_window.push_back(p);
    if (report.islands.size() < in_window.size())
        fail("IslandCountMismatch",
             std::to_string(report.islands.size()) + " islands for " +
                 std::to_string(in_window.size()) + " predicted centers");
    std::vector<double> dev(in_window.size());
    for (std::size_t n = 0; n < in_window.size(); ++n)
        dev[n] = std::abs(report.islands[n].mid() - in_window[n]) / spacing;
    return dev;
}

namespace {

double ball_radius_for(const PerturbedLandauConfig& cfg) {
    if (cfg.ball_radius > 0.0) return cfg.ball_radius;
    return 10.0 / std::sqrt(cfg.eps * cfg.field.B0);
}

struct BallAnalysis {
    SpectrumReport report;
    std::vector<double> bulk_values;
};

// Dense (or Lanczos) solve of a ball Peierls matrix, bulk filter, islands.
BallAnalysis analyze_ball(const HoppingSet& h, const Lattice& lat, const FieldSpec& field,
                          double eps, double kappa, double radius, double gap_threshold,
                          Interval window, double boundary_frac, double weight_tol,
                          int dense_threshold) {
    PeierlsMatrix pm =
        build_effective_matrix(h, lat, field, eps, kappa, BallGeometry{radius});
    const int dim = pm.dim();
    int k = -1;
    if (dim > dense_threshold) {
        // iterative path: ask for everything plausibly inside the window
        k = std::min(dim, std::max(64, dim / 8));
    }
    EigenResult er = eigens(pm.M, k, true, dense_threshold);
    std::vector<double> vals(er.values.data(), er.values.data() + er.values.size());
    BulkFilterResult bf = bulk_filter(vals, er.vectors, pm.sites, radius, boundary_frac,
                                      weight_tol);
    BallAnalysis out;
    out.bulk_values = bf.values;
    out.report = detect_islands(bf.values, gap_threshold, window);
    out.report.filtered_out = bf.removed;
    return out;
}

} // namespace

PerturbedLandauResult perturbed_landau_check(const PerturbedLandauConfig& cfg) {
    if (cfg.ball_radius == 0.0 && !(cfg.eps * cfg.field.B0 > 0.0))
        fail("BadArgument", "perturbed_landau_check: need eps*B0 > 0");
    const double radius = ball_radius_for(cfg);

    QuasiBlochData qb = quasi_bloch(cfg.hoppings, cfg.lat, 64);
    const double m = qb.harmonic.m;
    const double spacing = 2.0 * cfg.eps * m * cfg.field.B0;
    const std::vector<double> centers =
        landau_prediction(qb.harmonic, cfg.field.B0, cfg.eps, cfg.landau_n);
    const Interval window{qb.harmonic.min_value - 0.45 * spacing,
                          centers.back() + 0.45 * spacing};
    const double gap_threshold = cfg.gap_threshold_frac * spacing;

    double amp = 0.0;
    for (const auto& t : cfg.field.profile) amp += std::abs(t.amp);
    if (amp <= 0.0) fail("BadArgument", "perturbed_landau_check: field profile is empty");

    PerturbedLandauResult res;
    res.spacing = spacing;

    auto run = [&](double kappa, double weight_tol) {
        return analyze_ball(cfg.hoppings, cfg.lat, cfg.field, cfg.eps, kappa, radius,
                            gap_threshold, window, cfg.boundary_frac, weight_tol,
                            cfg.dense_threshold);
    };

    // kappa = 0 reference: residual cluster widths. The unperturbed Landau
    // states are circular, so a much stricter boundary filter is admissible
    // (and needed to expose the true degeneracy splitting).
    {
        BallAnalysis base = run(0.0, std::min(cfg.weight_tol, 1e-8));
        if (base.report.islands.size() < static_cast<std::size_t>(cfg.landau_n + 1))
            fail("ClustersUnresolvable", "kappa=0 run resolves too few clusters");
        for (int n = 0; n <= cfg.landau_n; ++n)
            res.zero_beta_width =
                std::max(res.zero_beta_width, base.report.islands[n].length());
        res.reports.push_back(base.report);
    }

    for (double kappa : cfg.kappas) {
        if (kappa <= 0.0) continue;
        BallAnalysis ba = run(kappa, cfg.weight_tol);
        if (ba.report.islands.size() < static_cast<std::size_t>(cfg.landau_n + 1))
            fail("ClustersUnresolvable",
                 "clusters merged or unresolved at kappa = " + std::to_string(kappa));
        double w = 0.0, dev = 0.0;
        for (int n = 0; n <= cfg.landau_n; ++n) {
            w = std::max(w, ba.report.islands[n].length());
            dev = std::max(dev, std::abs(ba.report.islands[n].mid() - centers[n]) / spacing);
        }
        res.betas.push_back(kappa * amp);
        res.widths.push_back(std::max(w, 1e-16));
        res.center_dev.push_back(dev);
        res.reports.push_back(ba.report);
    }

    if (res.betas.size() >= 2) {
        res.width_fit.law = "cluster width ~ beta";
        res.width_fit.fit = loglog_fit(res.betas, res.widths);
    }
    return res;
}

SweepResult scaling_sweep(const SweepSpec& spec) {
    SweepResult out;

    // harmonic data from the smallest requested eps (or eps_fixed)
    double eps0 = spec.eps_fixed;
    if (eps0 <= 0.0 && !spec.eps_list.empty()) eps0 = spec.eps_list.front();
    if (eps0 <= 0.0) fail("BadArgument", "scaling_sweep: no epsilon to work with");
    HoppingSet h0 = spec.hoppings_for_eps(eps0);
    QuasiBlochData qb0 = quasi_bloch(h0, spec.lat, spec.grid_n);
    out.m_eff = qb0.harmonic.m;
    out.min_value = qb0.harmonic.min_value;

    // ---- torus cells at kappa = 0: gap law + width law in eps ----
    std::vector<double> eps_ok, min_gaps, max_widths;
    for (double eps : spec.eps_list) {
        SweepCell cell;
        cell.eps = eps;
        cell.kappa = 0.0;
        cell.geometry = "torus";
        try {
            int q = 0;
            for (int trial = 2; trial <= spec.torus_qmax; ++trial) {
                if (rational_flux_p(eps, spec.field.B0, spec.lat, trial)) {
                    q = trial;
                    break;
                }
            }
            if (q == 0)
                fail("IrrationalFluxOnTorus",
                     "no q <= qmax realizes the flux 2*pi*p/q");
            HoppingSet h = spec.hoppings_for_eps(eps);
            QuasiBlochData qb = quasi_bloch(h, spec.lat, spec.grid_n);
            const double m = qb.harmonic.m;
            const double spacing = 2.0 * eps * m * spec.field.B0;
            const Interval window{
                qb.harmonic.min_value - 0.45 * spacing,
                qb.harmonic.min_value + (2.0 * spec.landau_n + 2.0) * eps * m * spec.field.B0};
            std::vector<double> vals =
                torus_spectrum(h, spec.lat, spec.field, eps, q, spec.torus_cells);
            cell.report = detect_islands(vals, spec.gap_threshold_frac * spacing, window);
            const std::size_t want = static_cast<std::size_t>(spec.landau_n) + 1;
            if (cell.report.islands.size() < want)
                fail("ClustersUnresolvable", "torus islands unresolved");
            double ming = 1e300, maxw = 0.0;
            for (std::size_t n = 0; n + 1 < want; ++n)
                ming = std::min(ming, cell.report.gaps[n].length());
            for (std::size_t n = 0; n < want; ++n)
                maxw = std::max(maxw, cell.report.islands[n].length());
            eps_ok.push_back(eps);
            min_gaps.push_back(ming);
            max_widths.push_back(std::max(maxw, 1e-16));
            out.implied_c2.push_back(eps / ming);
            cell.raw.assign(vals.begin(),
                            vals.begin() + std::min<std::size_t>(vals.size(), 4096));
        } catch (const Error& e) {
            cell.status = "failed";
            cell.error_kind = e.kind();
        }
        out.cells.push_back(std::move(cell));
    }
    if (eps_ok.size() >= 2) {
        ScalingFit gap_fit;
        gap_fit.law = "min gap ~ eps";
        gap_fit.fit = loglog_fit(eps_ok, min_gaps);
        out.fits.push_back(std::move(gap_fit));
        ScalingFit width_fit;
        width_fit.law = "island width ~ eps (kappa=0)";
        width_fit.fit = loglog_fit(eps_ok, max_widths);
        out.fits.push_back(std::move(width_fit));
    }

    // ---- ball cells over kappa at eps_fixed ----
    if (!spec.kappa_list.empty() && spec.eps_fixed > 0.0) {
        const double eps = spec.eps_fixed;
        HoppingSet h = spec.hoppings_for_eps(eps);
        QuasiBlochData qb = quasi_bloch(h, spec.lat, spec.grid_n);
        const double m = qb.harmonic.m;
        const double spacing = 2.0 * eps * m * spec.field.B0;
        const std::vector<double> centers =
            landau_prediction(qb.harmonic, spec.field.B0, eps, spec.landau_n);
        const Interval window{qb.harmonic.min_value - 0.45 * spacing,
                              centers.back() + 0.45 * spacing};
        const double radius = spec.ball_radius > 0.0
                                  ? spec.ball_radius
                                  : 10.0 / std::sqrt(eps * spec.field.B0);
        const double gap_threshold = spec.gap_threshold_frac * spacing;

        std::vector<double> base_bulk;
        {
            SweepCell cell;
            cell.eps = eps;
            cell.kappa = 0.0;
            cell.geometry = "ball";
            try {
                BallAnalysis ba = analyze_ball(h, spec.lat, spec.field, eps, 0.0, radius,
                                               gap_threshold, window, spec.boundary_frac,
                                               spec.weight_tol, spec.dense_threshold);
                base_bulk = ba.bulk_values;
                cell.report = ba.report;
                cell.raw = ba.bulk_values;
            } catch (const Error& e) {
                cell.status = "failed";
                cell.error_kind = e.kind();
            }
            out.cells.push_back(std::move(cell));
        }

        std::vector<double> kap_ok, widths, dists;
        for (double kappa : spec.kappa_list) {
            if (kappa <= 0.0) continue;
            SweepCell cell;
            cell.eps = eps;
            cell.kappa = kappa;
            cell.geometry = "ball";
            try {
                BallAnalysis ba =
                    analyze_ball(h, spec.lat, spec.field, eps, kappa, radius, gap_threshold,
                                 window, spec.boundary_frac, spec.weight_tol,
                                 spec.dense_threshold);
                cell.report = ba.report;
                cell.raw = ba.bulk_values;
                double w = 0.0;
                const std::size_t want =
                    std::min(ba.report.islands.size(),
                             static_cast<std::size_t>(spec.landau_n) + 1);
                for (std::size_t n = 0; n < want; ++n)
                    w = std::max(w, ba.report.islands[n].length());
                kap_ok.push_back(kappa);
                widths.push_back(std::max(w, 1e-16));
                if (!base_bulk.empty()) {
                    HausdorffResult hd = hausdorff(ba.bulk_values, base_bulk, window);
                    dists.push_back(std::max(hd.value, 1e-16));
                }
            } catch (const Error& e) {
                cell.status = "failed";
                cell.error_kind = e.kind();
            }
            out.cells.push_back(std::move(cell));
        }
        if (kap_ok.size() >= 2) {
            ScalingFit wf;
            wf.law = "island width ~ kappa (fixed eps)";
            wf.fit = loglog_fit(kap_ok, widths);
            out.fits.push_back(std::move(wf));
            if (dists.size() == kap_ok.size()) {
                ScalingFit hf;
                hf.law = "hausdorff(sigma_k, sigma_0) ~ kappa";
                hf.fit = loglog_fit(kap_ok, dists);
                out.fits.push_back(std::move(hf));
            }
        }
    }
    return out;
}

} // namespace mbl
