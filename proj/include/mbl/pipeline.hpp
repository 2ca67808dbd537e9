#ifndef MBL_PIPELINE_HPP
#define MBL_PIPELINE_HPP

#include <string>

#include "mbl/config.hpp"

namespace mbl {

struct PipelineOptions {
    std::string out_override; // overrides config output dir when nonempty
    bool no_cache = false;
    int threads = 0; // 0 = default resolution
};

/// Executes one of {bands, wannier, effective, analyze, sweep} plus cached
/// prerequisites. Returns the process exit code: 0 ok, 1 stage failure
/// (error.json written), 2 invalid configuration.
int run_pipeline(const RunConfig& cfg, const std::string& subcommand,
                 const PipelineOptions& opts = {});

} // namespace mbl

#endif
