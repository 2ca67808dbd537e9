#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "mbl/pipeline.hpp"
#include "mbl/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mbl: spectral toolkit for weakly magnetic periodic Schrodinger operators"};
    app.set_version_flag("--version", mbl::toolkit_version);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool no_cache = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "path to the JSON run configuration")
            ->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_flag("--no-cache", no_cache, "ignore and do not write stage caches");
        sub->add_option("--threads", threads,
                        "worker threads (default: MBL_THREADS or hardware)");
    };
    for (const char* name : {"bands", "wannier", "effective", "analyze", "sweep"})
        add_common(app.add_subcommand(name));

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    mbl::RunConfig cfg;
    try {
        cfg = mbl::load_config(config_path);
    } catch (const mbl::Error& e) {
        std::cerr << "{\"error\":{\"kind\":\"" << e.kind() << "\",\"message\":\""
                  << e.what() << "\"}}\n";
        return 2;
    }

    mbl::PipelineOptions opts;
    opts.out_override = out_dir;
    opts.no_cache = no_cache;
    opts.threads = threads;
    return mbl::run_pipeline(cfg, sub, opts);
}
