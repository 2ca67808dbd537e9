#include "mbl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "mbl/effective.hpp"
#include "mbl/report.hpp"
#include "mbl/spectral.hpp"
#include "mbl/threading.hpp"
#include "mbl/version.hpp"
#include "mbl/wannier.hpp"

namespace mbl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct StageRecord {
    std::string name;
    bool cache_hit = false;
    double seconds = 0.0;
};

struct Ctx {
    RunConfig cfg;
    std::string out;
    bool use_cache = true;
    std::string subcommand;

    std::vector<StageRecord> stages;
    std::vector<std::pair<std::string, std::string>> cell_status; // (cell, status)

    std::optional<BandStructure> bands;       // values always; vectors maybe
    std::optional<HypothesisClass> cls;
    std::optional<GroundStateBound> bound;
    std::optional<HarmonicData> band0_harmonic;
    std::optional<WannierFunction> wannier;
    std::optional<HoppingSet> band_hoppings;
    std::map<std::string, HoppingSet> hoppings_by_key;

    std::string cache_dir() const { return out + "/cache"; }
};

// ---------------------------------------------------------------- helpers

std::string csv_of_bands(const BandStructure& bs) {
    std::ostringstream os;
    os << "t1,t2,theta1,theta2";
    for (int j = 0; j < bs.nbands; ++j) os << ",lambda" << j;
    os << "\n";
    for (int a = 0; a < bs.grid.n; ++a)
        for (int b = 0; b < bs.grid.n; ++b) {
            const Vec2 t = bs.grid.fractional(a, b);
            const Vec2 th = bs.grid.theta(a, b);
            os << format_double(t.x) << ',' << format_double(t.y) << ','
               << format_double(th.x) << ',' << format_double(th.y);
            for (int j = 0; j < bs.nbands; ++j)
                os << ',' << format_double(bs.bands[j][bs.grid.flat(a, b)]);
            os << "\n";
        }
    return os.str();
}

void truncate_relative(HoppingSet& h, double rel_tol) {
    double mx = 0.0;
    for (const auto& [g, v] : h.entries) mx = std::max(mx, std::abs(v));
    const double tol = rel_tol * mx;
    for (auto it = h.entries.begin(); it != h.entries.end();) {
        if (!(it->first == IntPair{0, 0}) && std::abs(it->second) < tol) {
            h.max_omitted = std::max(h.max_omitted, std::abs(it->second));
            it = h.entries.erase(it);
        } else {
            ++it;
        }
    }
    h.trunc_tol = tol;
}

json hoppings_to_json(const HoppingSet& h) {
    json arr = json::array();
    for (const auto& [g, v] : h.entries) {
        json t;
        t["g"] = {g.a, g.b};
        t["re"] = v.real();
        t["im"] = v.imag();
        arr.push_back(t);
    }
    json out;
    out["entries"] = arr;
    out["truncRadius"] = h.trunc_radius;
    out["truncTol"] = h.trunc_tol;
    out["maxOmitted"] = h.max_omitted;
    return out;
}

HoppingSet hoppings_from_json(const json& j, const Lattice& lat) {
    HoppingSet h;
    h.lat = lat;
    for (const auto& t : j.at("entries"))
        h.entries[{t.at("g")[0].get<int>(), t.at("g")[1].get<int>()}] =
            cplx(t.at("re").get<double>(), t.at("im").get<double>());
    h.trunc_radius = j.at("truncRadius").get<double>();
    h.trunc_tol = j.at("truncTol").get<double>();
    h.max_omitted = j.at("maxOmitted").get<double>();
    return h;
}

// ---------------------------------------------------------------- stages

bool vectors_complete(const BandStructure& bs) {
    if (bs.vectors.size() != bs.grid.size()) return false;
    for (const auto& v : bs.vectors)
        if (v.size() == 0) return false;
    return true;
}

void ensure_bands(Ctx& ctx, bool need_vectors) {
    if (ctx.bands && (!need_vectors || vectors_complete(*ctx.bands))) return;
    const RunConfig& c = ctx.cfg;
    const std::string key = hash_hex(fnv1a(bands_slice(c)));
    const std::string cache_csv = ctx.cache_dir() + "/bands_" + key + ".json";

    StageRecord rec{"bands"};
    const double t0 = now_seconds();
    bool loaded = false;
    if (ctx.use_cache && !need_vectors && !ctx.bands && fs::exists(cache_csv)) {
        const json j = json::parse(read_file(cache_csv));
        if (j.at("key") == key) {
            BandStructure bs;
            bs.grid = ThetaGrid{c.lattice, c.grid_n};
            bs.potential = c.potential;
            bs.cutoff = c.cutoff;
            bs.nbands = c.nbands;
            bs.bands.assign(c.nbands, std::vector<double>(bs.grid.size(), 0.0));
            const auto& vals = j.at("bands");
            for (int b = 0; b < c.nbands; ++b)
                for (std::size_t i = 0; i < bs.grid.size(); ++i)
                    bs.bands[b][i] = vals[b][i].get<double>();
            // theta=0 eigenvector kept for the ground-state bound
            bs.vectors.resize(bs.grid.size());
            Eigen::VectorXcd v0(j.at("center_vec_re").size());
            for (Eigen::Index i = 0; i < v0.size(); ++i)
                v0(i) = cplx(j.at("center_vec_re")[i].get<double>(),
                             j.at("center_vec_im")[i].get<double>());
            bs.vectors[bs.grid.center_index()] = v0;
            ctx.bands = std::move(bs);
            loaded = true;
            rec.cache_hit = true;
        }
    }
    if (!loaded) {
        ctx.bands = solve_bands(c.potential, c.lattice, c.grid_n, c.nbands, c.cutoff, true);
        if (ctx.use_cache) {
            json j;
            j["key"] = key;
            json vals = json::array();
            for (int b = 0; b < c.nbands; ++b) {
                json row = json::array();
                for (double v : ctx.bands->bands[b]) row.push_back(v);
                vals.push_back(std::move(row));
            }
            j["bands"] = std::move(vals);
            const Eigen::VectorXcd& v0 = ctx.bands->vectors[ctx.bands->grid.center_index()];
            json re = json::array(), im = json::array();
            for (Eigen::Index i = 0; i < v0.size(); ++i) {
                re.push_back(v0(i).real());
                im.push_back(v0(i).imag());
            }
            j["center_vec_re"] = std::move(re);
            j["center_vec_im"] = std::move(im);
            atomic_write(cache_csv, j.dump());
        }
    }
    rec.seconds = now_seconds() - t0;
    ctx.stages.push_back(rec);

    ctx.cls = classify_hypothesis(*ctx.bands, default_classify_tol(*ctx.bands));
    ctx.band0_harmonic = band_minimum_hessian(ctx.bands->band(0), ctx.bands->grid);
    ctx.bound = ground_state_bound_check(ctx.cfg.potential, ctx.cfg.lattice, *ctx.bands,
                                         ctx.cfg.cutoff);
}

void refuse_crossing(const Ctx& ctx) {
    if (ctx.cls && *ctx.cls == HypothesisClass::Crossing)
        fail("CrossingBandRefused",
             "the first two bands touch on the grid; downstream stages need a "
             "non-crossing band");
}

void write_harmonic(JsonWriter& w, const HarmonicData& hd) {
    w.begin_object();
    w.key("theta_min").begin_array().value(hd.theta_min.x).value(hd.theta_min.y).end_array();
    w.key("quad_form").begin_array().value(hd.q11).value(hd.q12).value(hd.q22).end_array();
    w.kv("m1", hd.m1);
    w.kv("m2", hd.m2);
    w.kv("m", hd.m);
    w.kv("min_value", hd.min_value);
    w.end_object();
}

void write_bands_outputs(Ctx& ctx) {
    const BandStructure& bs = *ctx.bands;
    double sup0 = -1e300, inf0 = 1e300, inf1 = 1e300;
    for (std::size_t i = 0; i < bs.grid.size(); ++i) {
        sup0 = std::max(sup0, bs.bands[0][i]);
        inf0 = std::min(inf0, bs.bands[0][i]);
        inf1 = std::min(inf1, bs.bands[1][i]);
    }
    JsonWriter w;
    w.begin_object();
    w.key("meta").begin_object();
    w.kv("schema", report_schema);
    w.kv("stage", "bands");
    w.kv("config_hash", hash_hex(fnv1a(full_slice(ctx.cfg))));
    w.kv("version", toolkit_version);
    w.end_object();
    w.kv("classification", to_string(*ctx.cls));
    w.kv("band0_min", inf0);
    w.kv("band0_max", sup0);
    w.kv("band1_min", inf1);
    w.key("harmonic");
    write_harmonic(w, *ctx.band0_harmonic);
    w.key("ground_state_bound").begin_object();
    w.kv("C", ctx.bound->C);
    w.kv("holds", ctx.bound->holds);
    w.kv("margin", ctx.bound->margin);
    w.end_object();
    w.end_object();
    atomic_write(ctx.out + "/bands.json", w.str());
    atomic_write(ctx.out + "/bands.csv", csv_of_bands(bs));
}

void ensure_wannier(Ctx& ctx) {
    if (ctx.wannier && ctx.band_hoppings) return;
    ensure_bands(ctx, false);
    refuse_crossing(ctx);
    const RunConfig& c = ctx.cfg;
    const std::string wkey = hash_hex(fnv1a(wannier_slice(c)));
    const std::string csv_path = ctx.cache_dir() + "/wannier_" + wkey + ".csv";
    const std::string meta_path = ctx.cache_dir() + "/wannier_" + wkey + ".json";

    StageRecord rec{"wannier"};
    const double t0 = now_seconds();
    bool loaded = false;
    if (ctx.use_cache && fs::exists(csv_path) && fs::exists(meta_path)) {
        const json meta = json::parse(read_file(meta_path));
        if (meta.at("key") == wkey) {
            WannierFunction wf;
            wf.lat = c.lattice;
            wf.K = meta.at("K").get<int>();
            wf.M = meta.at("M").get<int>();
            wf.R_w = meta.at("R_w").get<double>();
            wf.cell_measure = meta.at("cell_measure").get<double>();
            wf.decay_rate = meta.at("decay_rate").get<double>();
            wf.decay_prefactor = meta.at("decay_prefactor").get<double>();
            wf.decay_residual = meta.at("decay_residual").get<double>();
            wf.values.assign(static_cast<std::size_t>(wf.side()) * wf.side(), cplx(0, 0));
            std::istringstream is(read_file(csv_path));
            std::string line;
            std::getline(is, line); // header
            std::size_t count = 0;
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                std::istringstream ls(line);
                std::string tok;
                double vals[4];
                for (int t = 0; t < 4; ++t) {
                    if (!std::getline(ls, tok, ',')) fail("IoError", "bad wannier csv");
                    vals[t] = std::stod(tok);
                }
                wf.values[count++] = cplx(vals[2], vals[3]);
            }
            if (count == wf.values.size()) {
                ctx.wannier = std::move(wf);
                loaded = true;
                rec.cache_hit = true;
            }
        }
    }
    if (!loaded) {
        ensure_bands(ctx, true);
        BandStructure fixed = fix_gauge(*ctx.bands);
        ctx.wannier =
            synthesize_wannier(fixed, c.lattice, c.wannier_radius(), c.wannier_spacing());
        if (ctx.use_cache || true) {
            // cache files double as the exported artifact
            const WannierFunction& wf = *ctx.wannier;
            std::ostringstream os;
            os << "x1,x2,re,im\n";
            for (int m = -wf.M; m <= wf.M; ++m)
                for (int n = -wf.M; n <= wf.M; ++n) {
                    const Vec2 x = wf.position(m, n);
                    const cplx v = wf.values[wf.flat(m, n)];
                    os << format_double(x.x) << ',' << format_double(x.y) << ','
                       << format_double(v.real()) << ',' << format_double(v.imag()) << "\n";
                }
            atomic_write(csv_path, os.str());
            json meta;
            meta["key"] = wkey;
            meta["K"] = wf.K;
            meta["M"] = wf.M;
            meta["R_w"] = wf.R_w;
            meta["cell_measure"] = wf.cell_measure;
            meta["decay_rate"] = wf.decay_rate;
            meta["decay_prefactor"] = wf.decay_prefactor;
            meta["decay_residual"] = wf.decay_residual;
            meta["grid"] = {{"spacing", c.wannier_spacing()}, {"points_per_edge", wf.side()}};
            atomic_write(meta_path, meta.dump());
        }
    }
    rec.seconds = now_seconds() - t0;
    ctx.stages.push_back(rec);

    HoppingSet bh = hoppings_from_band(ctx.bands->band(0), ctx.bands->grid, 0.0);
    truncate_relative(bh, c.trunc_tol);
    ctx.band_hoppings = std::move(bh);
}

void write_wannier_outputs(Ctx& ctx) {
    const WannierFunction& wf = *ctx.wannier;
    JsonWriter w;
    w.begin_object();
    w.key("meta").begin_object();
    w.kv("schema", report_schema);
    w.kv("stage", "wannier");
    w.kv("config_hash", hash_hex(fnv1a(full_slice(ctx.cfg))));
    w.kv("version", toolkit_version);
    w.end_object();
    w.kv("K", wf.K);
    w.kv("M", wf.M);
    w.kv("R_w", wf.R_w);
    w.kv("decay_rate", wf.decay_rate);
    w.kv("decay_prefactor", wf.decay_prefactor);
    w.kv("decay_residual", wf.decay_residual);
    w.key("band_hoppings").begin_array();
    for (const auto& [g, v] : ctx.band_hoppings->entries) {
        w.begin_object();
        w.key("g").begin_array().value(g.a).value(g.b).end_array();
        w.kv("re", v.real());
        w.kv("im", v.imag());
        w.end_object();
    }
    w.end_array();
    w.end_object();
    atomic_write(ctx.out + "/wannier.json", w.str());

    const std::string wkey = hash_hex(fnv1a(wannier_slice(ctx.cfg)));
    const std::string src = ctx.cache_dir() + "/wannier_" + wkey + ".csv";
    atomic_write(ctx.out + "/wannier.csv", read_file(src));
}

const HoppingSet& ensure_hoppings(Ctx& ctx, double eps) {
    const std::string key = hash_hex(fnv1a(hoppings_slice(ctx.cfg, eps)));
    auto it = ctx.hoppings_by_key.find(key);
    if (it != ctx.hoppings_by_key.end()) return it->second;
    ensure_wannier(ctx);
    const RunConfig& c = ctx.cfg;
    const std::string path = ctx.cache_dir() + "/hoppings_" + key + ".json";

    StageRecord rec{"hoppings eps=" + format_double(eps)};
    const double t0 = now_seconds();
    if (ctx.use_cache && fs::exists(path)) {
        const json j = json::parse(read_file(path));
        if (j.at("key") == key) {
            HoppingSet h = hoppings_from_json(j, c.lattice);
            rec.cache_hit = true;
            rec.seconds = now_seconds() - t0;
            ctx.stages.push_back(rec);
            return ctx.hoppings_by_key.emplace(key, std::move(h)).first->second;
        }
    }

    FieldSpec const_field = c.field; // same B0; profile ignored at kappa=0
    const double gram_radius = c.hopping_radius() + c.lattice_edge();
    std::vector<LatticeSite> sites = enumerate_sites(c.lattice, gram_radius);

    // grid-resolution guard at eps = 0 against the independent band transform
    GramianData gram0 = magnetic_gramian(*ctx.wannier, sites, 0.0, 0.0, const_field);
    HoppingSet h0 = magnetic_hoppings(*ctx.wannier, gram0, c.potential, c.lattice, 0.0,
                                      c.hopping_radius(), 0.0, &*ctx.band_hoppings);
    HoppingSet h;
    if (eps == 0.0) {
        h = std::move(h0);
    } else {
        GramianData gram = magnetic_gramian(*ctx.wannier, sites, eps, 0.0, const_field);
        h = magnetic_hoppings(*ctx.wannier, gram, c.potential, c.lattice, eps,
                              c.hopping_radius(), 0.0, nullptr);
    }
    truncate_relative(h, c.trunc_tol);

    if (ctx.use_cache) {
        json j = hoppings_to_json(h);
        j["key"] = key;
        atomic_write(path, j.dump());
    }
    rec.seconds = now_seconds() - t0;
    ctx.stages.push_back(rec);
    return ctx.hoppings_by_key.emplace(key, std::move(h)).first->second;
}

struct ResolvedGeometry {
    Geometry geom;
    std::string kind;
    int q = 0;
    double radius = 0.0;
};

ResolvedGeometry resolve_geometry(const Ctx& ctx, double eps, double kappa) {
    const RunConfig& c = ctx.cfg;
    ResolvedGeometry rg;
    auto torus_q = [&]() -> int {
        if (c.geometry.q > 0) return c.geometry.q;
        for (int q = 2; q <= 4096; ++q)
            if (rational_flux_p(eps, c.field.B0, c.lattice, q)) return q;
        return 0;
    };
    std::string kind = c.geometry.kind;
    if (kind == "auto") kind = (kappa == 0.0 && torus_q() > 0) ? "torus" : "ball";
    if (kind == "torus") {
        const int q = torus_q();
        if (q == 0)
            fail("IrrationalFluxOnTorus", "no q <= 4096 realizes the flux 2*pi*p/q");
        rg.geom = TorusGeometry{q};
        rg.kind = "torus";
        rg.q = q;
    } else {
        double r = c.geometry.radius;
        if (r <= 0.0) {
            if (!(eps * c.field.B0 > 0.0))
                fail("ConfigInvalid", "ball radius unset and eps*B0 = 0");
            r = 10.0 / std::sqrt(eps * c.field.B0);
        }
        rg.geom = BallGeometry{r};
        rg.kind = "ball";
        rg.radius = r;
    }
    return rg;
}

void append_meta(JsonWriter& w, const Ctx& ctx, const std::string& stage) {
    w.key("meta").begin_object();
    w.kv("schema", report_schema);
    w.kv("stage", stage);
    w.kv("config_hash", hash_hex(fnv1a(full_slice(ctx.cfg))));
    w.kv("version", toolkit_version);
    w.kv("epsilon", ctx.cfg.epsilon);
    w.kv("kappa", ctx.cfg.kappa);
    w.end_object();
}

void write_islands(JsonWriter& w, const SpectrumReport& rep) {
    w.key("islands").begin_array();
    for (const auto& is : rep.islands) {
        w.begin_object();
        w.kv("a", is.lo);
        w.kv("b", is.hi);
        w.kv("center", is.mid());
        w.kv("width", is.length());
        w.end_object();
    }
    w.end_array();
    w.key("gaps").begin_array();
    for (const auto& g : rep.gaps) {
        w.begin_object();
        w.kv("lo", g.lo);
        w.kv("hi", g.hi);
        w.kv("length", g.length());
        w.end_object();
    }
    w.end_array();
    w.kv("filtered_out", rep.filtered_out);
    w.key("window").begin_array().value(rep.window.lo).value(rep.window.hi).end_array();
}

void stage_effective(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    const HoppingSet& h = ensure_hoppings(ctx, c.epsilon);
    QuasiBlochData qb =
        quasi_bloch(h, c.lattice, c.grid_n, ctx.bands->band(0), std::max(c.epsilon, 1e-300));
    ResolvedGeometry rg = resolve_geometry(ctx, c.epsilon, c.kappa);
    PeierlsMatrix pm =
        build_effective_matrix(h, c.lattice, c.field, c.epsilon, c.kappa, rg.geom);

    JsonWriter w;
    w.begin_object();
    append_meta(w, ctx, "effective");
    w.kv("geometry", rg.kind);
    if (rg.kind == "torus")
        w.kv("q", rg.q);
    else
        w.kv("radius", rg.radius);
    w.kv("dim", pm.dim());
    w.kv("hermitian_defect", pm.hermitian_defect());
    w.key("hoppings").begin_array();
    for (const auto& [g, v] : h.entries) {
        w.begin_object();
        w.key("g").begin_array().value(g.a).value(g.b).end_array();
        w.kv("re", v.real());
        w.kv("im", v.imag());
        w.end_object();
    }
    w.end_array();
    w.key("harmonic");
    write_harmonic(w, qb.harmonic);
    w.kv("max_imag", qb.max_imag);
    w.end_object();
    atomic_write(ctx.out + "/effective.json", w.str());

    if (c.export_matrix) {
        std::ostringstream os;
        os << "row,col,re,im\n";
        for (int k = 0; k < pm.M.outerSize(); ++k)
            for (Eigen::SparseMatrix<cplx>::InnerIterator it(pm.M, k); it; ++it)
                os << it.row() << ',' << it.col() << ',' << format_double(it.value().real())
                   << ',' << format_double(it.value().imag()) << "\n";
        atomic_write(ctx.out + "/effective_matrix.csv", os.str());
    }
}

void stage_analyze(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    const HoppingSet& h = ensure_hoppings(ctx, c.epsilon);
    QuasiBlochData qb =
        quasi_bloch(h, c.lattice, c.grid_n, ctx.bands->band(0), std::max(c.epsilon, 1e-300));
    const double m = qb.harmonic.m;
    const double spacing = 2.0 * c.epsilon * m * c.field.B0;
    std::vector<double> centers = landau_prediction(qb.harmonic, c.field.B0, c.epsilon,
                                                    c.landau_n);
    Interval window;
    if (c.window) {
        window = {c.window->first, c.window->second};
    } else {
        window = {qb.harmonic.min_value - 0.45 * spacing, centers.back() + 0.45 * spacing};
    }
    const double gap_threshold = c.gap_threshold_frac * spacing;

    ResolvedGeometry rg = resolve_geometry(ctx, c.epsilon, c.kappa);
    SpectrumReport rep;
    std::vector<double> raw;
    if (rg.kind == "torus") {
        raw = torus_spectrum(h, c.lattice, c.field, c.epsilon, rg.q);
        rep = detect_islands(raw, gap_threshold, window);
    } else {
        PeierlsMatrix pm =
            build_effective_matrix(h, c.lattice, c.field, c.epsilon, c.kappa, rg.geom);
        EigenResult er = eigens(pm.M, -1, true, 4096);
        raw.assign(er.values.data(), er.values.data() + er.values.size());
        BulkFilterResult bf = bulk_filter(raw, er.vectors, pm.sites, rg.radius,
                                          c.boundary_frac, c.weight_tol);
        rep = detect_islands(bf.values, gap_threshold, window);
        rep.filtered_out = bf.removed;
    }

    std::vector<double> deviations;
    std::string landau_error;
    try {
        deviations = landau_cluster_check(rep, centers, spacing);
    } catch (const Error& e) {
        landau_error = e.kind();
    }

    JsonWriter w;
    w.begin_object();
    append_meta(w, ctx, "analyze");
    w.kv("geometry", rg.kind);
    write_islands(w, rep);
    w.key("landau").begin_object();
    w.key("predicted").numbers(centers);
    w.key("deviations").numbers(deviations);
    w.kv("spacing", spacing);
    w.kv("m", m);
    w.kv("min_value", qb.harmonic.min_value);
    if (!landau_error.empty()) w.kv("error", landau_error);
    w.end_object();
    w.key("fits").begin_array().end_array();
    w.end_object();
    atomic_write(ctx.out + "/report.json", w.str());

    std::ostringstream os;
    os << "eps=" << format_double(c.epsilon) << ";kappa=" << format_double(c.kappa)
       << ";geom=" << rg.kind << "\n";
    for (double v : rep.eigenvalues) os << format_double(v) << "\n";
    atomic_write(ctx.out + "/spectra.csv", os.str());
}

void stage_sweep(Ctx& ctx) {
    const RunConfig& c = ctx.cfg;
    if (c.sweep_epsilon.empty() && c.sweep_kappa.empty())
        fail("ConfigInvalid", "sweep requires sweep.epsilon and/or sweep.kappa");
    SweepSpec spec;
    spec.lat = c.lattice;
    spec.field = c.field;
    spec.eps_list = c.sweep_epsilon;
    spec.kappa_list = c.sweep_kappa;
    spec.eps_fixed = c.sweep_eps_fixed > 0.0
                         ? c.sweep_eps_fixed
                         : (c.epsilon > 0.0 ? c.epsilon
                                            : (c.sweep_epsilon.empty() ? 0.0
                                                                       : c.sweep_epsilon.front()));
    spec.landau_n = c.landau_n;
    spec.gap_threshold_frac = c.gap_threshold_frac;
    spec.boundary_frac = c.boundary_frac;
    spec.weight_tol = c.weight_tol;
    spec.ball_radius = c.geometry.radius;
    spec.torus_cells = c.sweep_torus_cells;
    spec.grid_n = c.grid_n;
    spec.hoppings_for_eps = [&ctx](double eps) -> HoppingSet {
        Ctx& mref = ctx;
        return ensure_hoppings(mref, eps);
    };
    SweepResult res = scaling_sweep(spec);

    for (const auto& cell : res.cells)
        ctx.cell_status.push_back(
            {"eps=" + format_double(cell.eps) + ";kappa=" + format_double(cell.kappa),
             cell.status == "ok" ? "ok" : cell.status + ":" + cell.error_kind});

    JsonWriter w;
    w.begin_object();
    append_meta(w, ctx, "sweep");
    w.kv("m", res.m_eff);
    w.kv("min_value", res.min_value);
    w.key("implied_c2").numbers(res.implied_c2);
    w.key("fits").begin_array();
    for (const auto& f : res.fits) {
        w.begin_object();
        w.kv("law", f.law);
        w.kv("exponent", f.fit.exponent);
        w.kv("prefactor", f.fit.prefactor);
        w.kv("residual", f.fit.residual);
        w.key("abscissa").numbers(f.fit.abscissa);
        w.key("values").numbers(f.fit.values);
        w.end_object();
    }
    w.end_array();
    w.key("cells").begin_array();
    for (const auto& cell : res.cells) {
        w.begin_object();
        w.kv("epsilon", cell.eps);
        w.kv("kappa", cell.kappa);
        w.kv("geometry", cell.geometry);
        w.kv("status", cell.status);
        if (cell.status != "ok") {
            w.kv("error_kind", cell.error_kind);
        } else {
            write_islands(w, cell.report);
        }
        w.end_object();
    }
    w.end_array();
    w.end_object();
    atomic_write(ctx.out + "/report.json", w.str());

    // raw eigenvalues: one column per cell
    std::size_t max_rows = 0;
    for (const auto& cell : res.cells) max_rows = std::max(max_rows, cell.raw.size());
    std::ostringstream os;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        if (i) os << ',';
        os << "eps=" << format_double(res.cells[i].eps)
           << ";kappa=" << format_double(res.cells[i].kappa)
           << ";geom=" << res.cells[i].geometry << ";status=" << res.cells[i].status;
    }
    os << "\n";
    for (std::size_t r = 0; r < max_rows; ++r) {
        for (std::size_t i = 0; i < res.cells.size(); ++i) {
            if (i) os << ',';
            if (r < res.cells[i].raw.size()) os << format_double(res.cells[i].raw[r]);
        }
        os << "\n";
    }
    atomic_write(ctx.out + "/spectra.csv", os.str());
}

void write_manifest(Ctx& ctx, const std::string& status, const std::string& error_kind) {
    JsonWriter w;
    w.begin_object();
    w.kv("config_hash", hash_hex(fnv1a(full_slice(ctx.cfg))));
    w.kv("version", toolkit_version);
    w.kv("subcommand", ctx.subcommand);
    w.kv("status", status);
    if (!error_kind.empty()) w.kv("error_kind", error_kind);
    w.key("stages").begin_array();
    for (const auto& s : ctx.stages) {
        w.begin_object();
        w.kv("name", s.name);
        w.kv("cache_hit", s.cache_hit);
        w.kv("seconds", s.seconds);
        w.end_object();
    }
    w.end_array();
    w.key("cells").begin_array();
    for (const auto& [cell, st] : ctx.cell_status) {
        w.begin_object();
        w.kv("cell", cell);
        w.kv("status", st);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    atomic_write(ctx.out + "/manifest.json", w.str());
}

} // namespace

int run_pipeline(const RunConfig& cfg, const std::string& subcommand,
                 const PipelineOptions& opts) {
    Ctx ctx;
    ctx.cfg = cfg;
    ctx.subcommand = subcommand;
    ctx.out = opts.out_override.empty() ? cfg.output_dir : opts.out_override;
    ctx.use_cache = cfg.cache && !opts.no_cache;
    if (opts.threads > 0) set_thread_count(opts.threads);

    try {
        if (subcommand == "bands") {
            ensure_bands(ctx, false);
            write_bands_outputs(ctx);
        } else if (subcommand == "wannier") {
            ensure_wannier(ctx);
            write_wannier_outputs(ctx);
        } else if (subcommand == "effective") {
            ensure_bands(ctx, false);
            refuse_crossing(ctx);
            stage_effective(ctx);
        } else if (subcommand == "analyze") {
            ensure_bands(ctx, false);
            refuse_crossing(ctx);
            stage_analyze(ctx);
        } else if (subcommand == "sweep") {
            ensure_bands(ctx, false);
            refuse_crossing(ctx);
            stage_sweep(ctx);
        } else {
            fail("ConfigInvalid", "unknown subcommand " + subcommand);
        }
    } catch (const Error& e) {
        JsonWriter w;
        w.begin_object();
        w.key("error").begin_object();
        w.kv("kind", e.kind());
        w.kv("message", e.what());
        w.kv("stage", subcommand);
        w.end_object();
        w.end_object();
        std::cerr << w.str() << "\n";
        try {
            atomic_write(ctx.out + "/error.json", w.str());
            write_manifest(ctx, "failed", e.kind());
        } catch (...) {
        }
        return e.kind() == "ConfigInvalid" ? 2 : 1;
    }
    write_manifest(ctx, "ok", "");
    return 0;
}

} // namespace mbl
