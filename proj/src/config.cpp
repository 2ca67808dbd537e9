#include "mbl/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mbl {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { fail("ConfigInvalid", msg); }

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
    if (!j.is_object()) bad(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

Vec2 parse_vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        bad(where + " must be a [x, y] number pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

double num(const json& j, const std::string& where, double lo, double hi) {
    if (!j.is_number()) bad(where + " must be a number");
    const double v = j.get<double>();
    if (!(v >= lo && v <= hi)) bad(where + " out of range");
    return v;
}

int integer(const json& j, const std::string& where, int lo, int hi) {
    if (!j.is_number_integer()) bad(where + " must be an integer");
    const int v = j.get<int>();
    if (v < lo || v > hi) bad(where + " out of range");
    return v;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        bad(std::string("JSON parse error: ") + e.what());
    }
    check_keys(j, "config",
               {"lattice", "potential", "field", "solver", "wannier", "effective",
                "analysis", "sweep", "epsilon", "kappa", "output", "cache"});
    RunConfig c;

    if (!j.contains("lattice")) bad("missing 'lattice'");
    check_keys(j["lattice"], "lattice", {"e1", "e2"});
    if (!j["lattice"].contains("e1") || !j["lattice"].contains("e2"))
        bad("lattice needs e1 and e2");
    c.lattice = make_lattice(parse_vec2(j["lattice"]["e1"], "lattice.e1"),
                             parse_vec2(j["lattice"]["e2"], "lattice.e2"));

    if (j.contains("potential")) {
        if (!j["potential"].is_array()) bad("'potential' must be an array");
        std::map<IntPair, cplx> coeffs;
        for (const auto& t : j["potential"]) {
            check_keys(t, "potential term", {"g", "re", "im"});
            if (!t.contains("g") || !t["g"].is_array() || t["g"].size() != 2 ||
                !t["g"][0].is_number_integer() || !t["g"][1].is_number_integer())
                bad("potential term needs integer pair g");
            const IntPair g{t["g"][0].get<int>(), t["g"][1].get<int>()};
            const double re = t.contains("re") ? num(t["re"], "potential.re", -1e6, 1e6) : 0.0;
            const double im = t.contains("im") ? num(t["im"], "potential.im", -1e6, 1e6) : 0.0;
            coeffs[g] += cplx(re, im);
        }
        try {
            c.potential = PotentialSpec(std::move(coeffs));
        } catch (const Error& e) {
            bad(e.what());
        }
    }

    if (j.contains("field")) {
        check_keys(j["field"], "field", {"B0", "profile"});
        const double B0 =
            j["field"].contains("B0") ? num(j["field"]["B0"], "field.B0", 0.0, 1e6) : 0.0;
        std::vector<FieldTerm> terms;
        if (j["field"].contains("profile")) {
            if (!j["field"]["profile"].is_array()) bad("field.profile must be an array");
            for (const auto& t : j["field"]["profile"]) {
                check_keys(t, "field.profile term", {"k", "amp", "phase"});
                FieldTerm ft;
                if (!t.contains("k")) bad("profile term needs k");
                ft.k = parse_vec2(t["k"], "profile.k");
                ft.amp = t.contains("amp") ? num(t["amp"], "profile.amp", -1e6, 1e6) : 0.0;
                ft.phase =
                    t.contains("phase") ? num(t["phase"], "profile.phase", -1e3, 1e3) : 0.0;
                terms.push_back(ft);
            }
        }
        c.field = make_field(B0, std::move(terms));
    }

    if (j.contains("solver")) {
        check_keys(j["solver"], "solver", {"cutoff", "gridN", "nbands"});
        if (j["solver"].contains("cutoff"))
            c.cutoff = integer(j["solver"]["cutoff"], "solver.cutoff", 1, 64);
        if (j["solver"].contains("gridN"))
            c.grid_n = integer(j["solver"]["gridN"], "solver.gridN", 8, 1024);
        if (j["solver"].contains("nbands"))
            c.nbands = integer(j["solver"]["nbands"], "solver.nbands", 2, 64);
        if (c.grid_n % 2 != 0) bad("solver.gridN must be even");
    }

    if (j.contains("wannier")) {
        check_keys(j["wannier"], "wannier", {"R_w", "spacing", "truncTol"});
        if (j["wannier"].contains("R_w"))
            c.R_w = num(j["wannier"]["R_w"], "wannier.R_w", 0.0, 1e6);
        if (j["wannier"].contains("spacing"))
            c.spacing = num(j["wannier"]["spacing"], "wannier.spacing", 0.0, 1e6);
        if (j["wannier"].contains("truncTol"))
            c.trunc_tol = num(j["wannier"]["truncTol"], "wannier.truncTol", 0.0, 1.0);
    }

    if (j.contains("effective")) {
        check_keys(j["effective"], "effective",
                   {"geometry", "hopRadius", "exportMatrix"});
        if (j["effective"].contains("geometry")) {
            const auto& g = j["effective"]["geometry"];
            check_keys(g, "effective.geometry", {"kind", "q", "radius"});
            if (g.contains("kind")) {
                c.geometry.kind = g["kind"].get<std::string>();
                if (c.geometry.kind != "ball" && c.geometry.kind != "torus" &&
                    c.geometry.kind != "auto")
                    bad("geometry.kind must be ball|torus|auto");
            }
            if (g.contains("q")) c.geometry.q = integer(g["q"], "geometry.q", 0, 4096);
            if (g.contains("radius"))
                c.geometry.radius = num(g["radius"], "geometry.radius", 0.0, 1e6);
        }
        if (j["effective"].contains("hopRadius"))
            c.hop_radius = num(j["effective"]["hopRadius"], "effective.hopRadius", 0.0, 1e6);
        if (j["effective"].contains("exportMatrix")) {
            if (!j["effective"]["exportMatrix"].is_boolean())
                bad("effective.exportMatrix must be a boolean");
            c.export_matrix = j["effective"]["exportMatrix"].get<bool>();
        }
    }

    if (j.contains("analysis")) {
        check_keys(j["analysis"], "analysis",
                   {"gapThresholdFrac", "boundaryFrac", "weightTol", "landauN", "window"});
        const auto& a = j["analysis"];
        if (a.contains("gapThresholdFrac"))
            c.gap_threshold_frac = num(a["gapThresholdFrac"], "gapThresholdFrac", 1e-6, 1.0);
        if (a.contains("boundaryFrac"))
            c.boundary_frac = num(a["boundaryFrac"], "boundaryFrac", 0.0, 0.9);
        if (a.contains("weightTol"))
            c.weight_tol = num(a["weightTol"], "weightTol", 0.0, 1.0);
        if (a.contains("landauN")) c.landau_n = integer(a["landauN"], "landauN", 0, 32);
        if (a.contains("window")) {
            if (!a["window"].is_array() || (a["window"].size() != 0 && a["window"].size() != 2))
                bad("analysis.window must be [] or [lo, hi]");
            if (a["window"].size() == 2) {
                const double lo = num(a["window"][0], "window.lo", -1e9, 1e9);
                const double hi = num(a["window"][1], "window.hi", -1e9, 1e9);
                if (!(lo < hi)) bad("analysis.window must satisfy lo < hi");
                c.window = {lo, hi};
            }
        }
    }

    if (j.contains("sweep")) {
        check_keys(j["sweep"], "sweep", {"epsilon", "kappa", "epsFixed", "torusCells"});
        const auto& s = j["sweep"];
        if (s.contains("epsilon")) {
            if (!s["epsilon"].is_array()) bad("sweep.epsilon must be an array");
            for (const auto& e : s["epsilon"])
                c.sweep_epsilon.push_back(num(e, "sweep.epsilon", 1e-9, 1.0));
        }
        if (s.contains("kappa")) {
            if (!s["kappa"].is_array()) bad("sweep.kappa must be an array");
            for (const auto& e : s["kappa"])
                c.sweep_kappa.push_back(num(e, "sweep.kappa", 0.0, 1.0));
        }
        if (s.contains("epsFixed"))
            c.sweep_eps_fixed = num(s["epsFixed"], "sweep.epsFixed", 0.0, 1.0);
        if (s.contains("torusCells"))
            c.sweep_torus_cells = integer(s["torusCells"], "sweep.torusCells", 1, 64);
    }

    if (j.contains("epsilon")) c.epsilon = num(j["epsilon"], "epsilon", 0.0, 1.0);
    if (j.contains("kappa")) c.kappa = num(j["kappa"], "kappa", 0.0, 1.0);

    if (j.contains("output")) {
        check_keys(j["output"], "output", {"dir"});
        if (j["output"].contains("dir")) c.output_dir = j["output"]["dir"].get<std::string>();
    }
    if (j.contains("cache")) {
        if (!j["cache"].is_boolean()) bad("'cache' must be a boolean");
        c.cache = j["cache"].get<bool>();
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

namespace {

void put(std::string& s, const char* name, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s=%.17g;", name, v);
    s += buf;
}

} // namespace

std::string bands_slice(const RunConfig& c) {
    std::string s = "bands:";
    put(s, "e1x", c.lattice.e1.x);
    put(s, "e1y", c.lattice.e1.y);
    put(s, "e2x", c.lattice.e2.x);
    put(s, "e2y", c.lattice.e2.y);
    for (const auto& [g, v] : c.potential.coefficients()) {
        s += "g" + std::to_string(g.a) + "," + std::to_string(g.b) + ":";
        put(s, "re", v.real());
        put(s, "im", v.imag());
    }
    s += "cut=" + std::to_string(c.cutoff) + ";N=" + std::to_string(c.grid_n) +
         ";nb=" + std::to_string(c.nbands) + ";";
    return s;
}

std::string wannier_slice(const RunConfig& c) {
    std::string s = bands_slice(c) + "wannier:";
    put(s, "Rw", c.wannier_radius());
    put(s, "sp", c.wannier_spacing());
    return s;
}

std::string hoppings_slice(const RunConfig& c, double eps) {
    std::string s = wannier_slice(c) + "hop:";
    put(s, "B0", c.field.B0);
    put(s, "eps", eps);
    put(s, "rad", c.hopping_radius());
    put(s, "tt", c.trunc_tol);
    return s;
}

std::string full_slice(const RunConfig& c) {
    std::string s = hoppings_slice(c, c.epsilon) + "full:";
    put(s, "kap", c.kappa);
    for (const auto& t : c.field.profile) {
        put(s, "kx", t.k.x);
        put(s, "ky", t.k.y);
        put(s, "amp", t.amp);
        put(s, "ph", t.phase);
    }
    s += "geom=" + c.geometry.kind + "," + std::to_string(c.geometry.q) + ";";
    put(s, "grad", c.geometry.radius);
    put(s, "gtf", c.gap_threshold_frac);
    put(s, "bf", c.boundary_frac);
    put(s, "wt", c.weight_tol);
    s += "lN=" + std::to_string(c.landau_n) + ";";
    if (c.window) {
        put(s, "wlo", c.window->first);
        put(s, "whi", c.window->second);
    }
    s += "tc=" + std::to_string(c.sweep_torus_cells) + ";";
    for (double e : c.sweep_epsilon) put(s, "se", e);
    for (double k : c.sweep_kappa) put(s, "sk", k);
    put(s, "sef", c.sweep_eps_fixed);
    return s;
}

} // namespace mbl
