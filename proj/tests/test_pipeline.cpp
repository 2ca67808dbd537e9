#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mbl/pipeline.hpp"
#include "mbl/report.hpp"

using namespace mbl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string small_config(const std::string& outdir, bool crossing = false,
                         double spacing = 0.0) {
    json j;
    j["lattice"]["e1"] = {two_pi, 0.0};
    j["lattice"]["e2"] = {0.0, two_pi};
    if (!crossing) {
        j["potential"] = json::array();
        for (auto [a, b] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            json t;
            t["g"] = {a, b};
            t["re"] = 1.0;
            j["potential"].push_back(t);
        }
    }
    j["field"]["B0"] = 1.0 / two_pi;
    j["field"]["profile"] = {{{"k", {2.0, 1.0}}, {"amp", 0.05}, {"phase", 0.4}}};
    j["solver"] = {{"cutoff", 4}, {"gridN", 16}, {"nbands", 2}};
    if (spacing > 0.0) j["wannier"] = {{"spacing", spacing}};
    j["analysis"] = {{"landauN", 1}};
    j["epsilon"] = 0.05;
    j["kappa"] = 0.0;
    j["output"]["dir"] = outdir;
    j["cache"] = true;
    return j.dump();
}

std::string write_tmp(const std::string& text, const std::string& name) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << text;
    return path;
}

} // namespace

TEST_CASE("config: strict parsing") {
    CHECK_THROWS_WITH_AS(parse_config("{\"latice\":{}}"),
                         doctest::Contains("ConfigInvalid"), Error);
    CHECK_THROWS_WITH_AS(parse_config("{\"lattice\":{\"e1\":[1,0],\"e2\":[0,1],\"x\":1}}"),
                         doctest::Contains("unknown key"), Error);
    CHECK_THROWS_WITH_AS(parse_config("not json"), doctest::Contains("ConfigInvalid"), Error);
    // reality violation in the potential
    CHECK_THROWS_AS(
        parse_config("{\"lattice\":{\"e1\":[1,0],\"e2\":[0,1]},"
                     "\"potential\":[{\"g\":[1,0],\"re\":1.0}]}"),
        Error);
    // window ordering
    CHECK_THROWS_AS(
        parse_config("{\"lattice\":{\"e1\":[1,0],\"e2\":[0,1]},"
                     "\"analysis\":{\"window\":[2.0,1.0]}}"),
        Error);
    RunConfig ok = parse_config(small_config("/tmp/x"));
    CHECK(ok.cutoff == 4);
    CHECK(ok.grid_n == 16);
}

TEST_CASE("pipeline: bands smoke test") {
    const std::string out = (fs::temp_directory_path() / "mbl_t_bands").string();
    fs::remove_all(out);
    RunConfig cfg = parse_config(small_config(out));
    CHECK(run_pipeline(cfg, "bands") == 0);
    CHECK(fs::exists(out + "/bands.json"));
    CHECK(fs::exists(out + "/bands.csv"));
    CHECK(fs::exists(out + "/manifest.json"));
    const json j = json::parse(read_file(out + "/bands.json"));
    CHECK(j.at("classification") == "gap");
    CHECK(j.at("ground_state_bound").at("holds") == true);
}

TEST_CASE("pipeline: crossing potential is refused downstream") {
    const std::string out = (fs::temp_directory_path() / "mbl_t_cross").string();
    fs::remove_all(out);
    RunConfig cfg = parse_config(small_config(out, /*crossing=*/true));
    CHECK(run_pipeline(cfg, "bands") == 0); // bands themselves are fine
    CHECK(run_pipeline(cfg, "effective") == 1);
    const json err = json::parse(read_file(out + "/error.json"));
    CHECK(err.at("error").at("kind") == "CrossingBandRefused");
}

TEST_CASE("pipeline: analyze determinism across runs and worker counts") {
    const std::string out1 = (fs::temp_directory_path() / "mbl_t_det1").string();
    const std::string out2 = (fs::temp_directory_path() / "mbl_t_det2").string();
    fs::remove_all(out1);
    fs::remove_all(out2);

    RunConfig cfg1 = parse_config(small_config(out1));
    PipelineOptions o1;
    o1.threads = 2;
    REQUIRE(run_pipeline(cfg1, "analyze", o1) == 0);

    RunConfig cfg2 = parse_config(small_config(out2));
    PipelineOptions o2;
    o2.threads = 1; // different worker count, no cache reuse across dirs
    REQUIRE(run_pipeline(cfg2, "analyze", o2) == 0);

    CHECK(read_file(out1 + "/report.json") == read_file(out2 + "/report.json"));
    CHECK(read_file(out1 + "/spectra.csv") == read_file(out2 + "/spectra.csv"));

    // rerun in place with a warm cache: byte-identical payloads
    const std::string before = read_file(out1 + "/report.json");
    REQUIRE(run_pipeline(cfg1, "analyze", o1) == 0);
    CHECK(read_file(out1 + "/report.json") == before);

    // cache hit recorded in the manifest
    const json man = json::parse(read_file(out1 + "/manifest.json"));
    bool any_hit = false;
    for (const auto& s : man.at("stages")) any_hit = any_hit || s.at("cache_hit").get<bool>();
    CHECK(any_hit);
}

TEST_CASE("pipeline: cache key tracks config changes") {
    const std::string out = (fs::temp_directory_path() / "mbl_t_cache").string();
    fs::remove_all(out);
    RunConfig cfg = parse_config(small_config(out));
    REQUIRE(run_pipeline(cfg, "wannier") == 0);
    std::size_t files_before = 0;
    for (auto& e : fs::directory_iterator(out + "/cache")) (void)e, ++files_before;

    // a wannier-affecting change must produce a new cache entry
    RunConfig cfg2 = parse_config(small_config(out, false, two_pi / 16.0));
    REQUIRE(run_pipeline(cfg2, "wannier") == 0);
    std::size_t files_after = 0;
    for (auto& e : fs::directory_iterator(out + "/cache")) (void)e, ++files_after;
    CHECK(files_after > files_before);
}

TEST_CASE("pipeline: report schema round trip") {
    const std::string out = (fs::temp_directory_path() / "mbl_t_round").string();
    fs::remove_all(out);
    RunConfig cfg = parse_config(small_config(out));
    REQUIRE(run_pipeline(cfg, "analyze") == 0);
    const std::string text = read_file(out + "/report.json");
    const json parsed = json::parse(text);
    CHECK(parsed.at("islands").is_array());
    CHECK(!parsed.at("islands").empty());
    // re-serialize and re-parse: identical structure
    const json reparsed = json::parse(parsed.dump());
    CHECK(parsed == reparsed);
    // numbers survive the round trip exactly (17 significant digits)
    CHECK(parsed.at("islands")[0].at("a").get<double>() ==
          reparsed.at("islands")[0].at("a").get<double>());
}

TEST_CASE("pipeline: empty islands serialize as arrays") {
    // emit a sweep with an impossible torus flux so a cell fails but the
    // report still carries well-formed arrays
    const std::string out = (fs::temp_directory_path() / "mbl_t_fail").string();
    fs::remove_all(out);
    json j = json::parse(small_config(out));
    j["sweep"] = {{"epsilon", {0.061234}}, {"kappa", json::array()}};
    j["effective"]["geometry"] = {{"kind", "torus"}};
    RunConfig cfg = parse_config(j.dump());
    CHECK(run_pipeline(cfg, "sweep") == 0);
    const json rep = json::parse(read_file(out + "/report.json"));
    REQUIRE(rep.at("cells").size() == 1);
    CHECK(rep.at("cells")[0].at("status") == "failed");
    CHECK(rep.at("cells")[0].at("error_kind") == "IrrationalFluxOnTorus");
    CHECK(rep.at("fits").is_array());
}
