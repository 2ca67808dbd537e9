#ifndef MBL_CONFIG_HPP
#define MBL_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbl/bloch.hpp"
#include "mbl/lattice.hpp"
#include "mbl/magnetic_phase.hpp"

namespace mbl {

struct GeometryConfig {
    std::string kind = "auto"; // "ball" | "torus" | "auto"
    int q = 0;                 // torus supercell (0 = derive from flux)
    double radius = 0.0;       // ball radius (0 = 10 magnetic lengths)
};

/// Parsed and validated run configuration. Units: lengths in the lattice
/// units of the config, energies in the units of the potential coefficients,
/// B0 in inverse length squared.
struct RunConfig {
    Lattice lattice;
    PotentialSpec potential;
    FieldSpec field;

    // solver block
    int cutoff = 8;
    int grid_n = 64;
    int nbands = 2;

    // wannier block
    double R_w = 0.0;      // 0: six lattice diameters
    double spacing = 0.0;  // 0: edge/16
    double trunc_tol = 1e-10; // relative to max |h|

    // effective block
    GeometryConfig geometry;
    double hop_radius = 0.0; // 0: three lattice diameters
    bool export_matrix = false;

    // analysis block
    double gap_threshold_frac = 0.25;
    double boundary_frac = 0.15;
    double weight_tol = 0.1;
    int landau_n = 2;
    std::optional<std::pair<double, double>> window;

    // sweep block
    std::vector<double> sweep_epsilon;
    std::vector<double> sweep_kappa;
    double sweep_eps_fixed = 0.0;
    int sweep_torus_cells = 1;

    double epsilon = 0.0;
    double kappa = 0.0;

    std::string output_dir = "out";
    bool cache = true;

    // derived helpers
    double lattice_edge() const {
        return std::max(lattice.e1.norm(), lattice.e2.norm());
    }
    double wannier_radius() const { return R_w > 0.0 ? R_w : 6.0 * lattice_edge(); }
    double wannier_spacing() const {
        return spacing > 0.0 ? spacing : lattice_edge() / 32.0;
    }
    double hopping_radius() const {
        return hop_radius > 0.0 ? hop_radius : 3.0 * lattice_edge() + 1e-9;
    }
};

/// Strict parser: unknown keys are rejected, ranges are validated.
/// Throws ConfigInvalid.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// FNV-1a over a canonical serialization; used for cache keys and manifests.
std::uint64_t fnv1a(const std::string& data);
std::string hash_hex(std::uint64_t h);

/// Canonical serializations of the config slices each stage depends on.
std::string bands_slice(const RunConfig& c);
std::string wannier_slice(const RunConfig& c);
std::string hoppings_slice(const RunConfig& c, double eps);
std::string full_slice(const RunConfig& c);

} // namespace mbl

#endif
