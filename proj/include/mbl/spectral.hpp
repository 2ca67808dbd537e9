#ifndef MBL_SPECTRAL_HPP
#define MBL_SPECTRAL_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbl/effective.hpp"
#include "mbl/numerics.hpp"

namespace mbl {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    double mid() const { return (lo + hi) / 2.0; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SpectrumReport {
    std::vector<double> eigenvalues; // retained, ascending, inside window
    std::vector<Interval> islands;
    std::vector<Interval> gaps;
    int filtered_out = 0;
    Interval window;
};

struct EigenResult {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXcd vectors; // column j pairs with values(j); may be empty
};

/// Bottom-k eigenpairs (k = -1 for the full spectrum). Dense below
/// dense_threshold, block Lanczos above.
EigenResult eigens(const Eigen::SparseMatrix<cplx>& M, int k = -1,
                   bool want_vectors = false, int dense_threshold = 2048);

/// Spacing-based clustering of the window-restricted eigenvalues.
SpectrumReport detect_islands(std::span<const double> eigs, double gap_threshold,
                              Interval window);

struct BulkFilterResult {
    std::vector<double> values; // retained eigenvalues, ascending
    std::vector<int> kept;      // indices into the input arrays
    int removed = 0;
};

/// Drops states whose squared amplitude beyond (1-boundary_frac)*radius
/// exceeds weight_tol. Vectors are columns aligned with values.
BulkFilterResult bulk_filter(std::span<const double> values, const Eigen::MatrixXcd& vectors,
                             const std::vector<LatticeSite>& sites, double radius,
                             double boundary_frac, double weight_tol);

struct HausdorffResult {
    double value = 0.0;
    bool one_empty = false; // value is +inf sentinel when set
};

HausdorffResult hausdorff(std::span<const double> A, std::span<const double> B,
                          Interval window);

/// deviations_n = |midpoint(island_n) - predicted_n| / spacing.
std::vector<double> landau_cluster_check(const SpectrumReport& report,
                                         std::span<const double> predicted, double spacing);

struct ScalingFit {
    std::string law;
    LogLogFit fit;
};

struct PerturbedLandauConfig {
    HoppingSet hoppings;
    Lattice lat;
    FieldSpec field;       // profile amplitude defines beta = kappa * amp
    double eps = 0.0;
    std::vector<double> kappas; // kappa = 0 handled separately from the fit
    double ball_radius = 0.0;   // 0: choose 10 magnetic lengths
    int landau_n = 2;           // clusters 0..landau_n tracked
    double gap_threshold_frac = 0.25;
    double boundary_frac = 0.15;
    double weight_tol = 0.1;
    int dense_threshold = 4096;
};

struct PerturbedLandauResult {
    std::vector<double> betas;       // kappa * profile amplitude, kappa > 0
    std::vector<double> widths;      // max tracked-cluster width per beta
    std::vector<double> center_dev;  // max |center - predicted|/spacing per beta
    double zero_beta_width = 0.0;    // max tracked width at kappa = 0
    double spacing = 0.0;            // 2 eps m B0
    ScalingFit width_fit;            // width vs beta
    std::vector<SpectrumReport> reports;
};

PerturbedLandauResult perturbed_landau_check(const PerturbedLandauConfig& cfg);

struct SweepSpec {
    std::function<HoppingSet(double eps)> hoppings_for_eps;
    Lattice lat;
    FieldSpec field;
    std::vector<double> eps_list;   // torus cells, kappa = 0
    std::vector<double> kappa_list; // ball cells at eps_fixed (kappa > 0)
    double eps_fixed = 0.0;
    int landau_n = 2;
    double gap_threshold_frac = 0.25;
    double boundary_frac = 0.15;
    double weight_tol = 0.1;
    double ball_radius = 0.0; // 0: 10 magnetic lengths
    int torus_cells = 1;      // magnetic cells along n1 per torus (width resolution)
    int torus_qmax = 4096;
    int grid_n = 64; // quasi-Bloch grid for harmonic data
    int dense_threshold = 4096;
};

struct SweepCell {
    double eps = 0.0;
    double kappa = 0.0;
    std::string geometry;
    std::string status = "ok";
    std::string error_kind;
    SpectrumReport report;
    std::vector<double> raw; // eigenvalues before filtering (bounded count)
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<ScalingFit> fits;
    std::vector<double> implied_c2; // per eps: eps / min bottom-window gap
    std::string harmonic_note;
    double m_eff = 0.0;
    double min_value = 0.0;
};

/// Full scaling sweep: (i) gap law and (ii) island-width law over eps at
/// kappa=0 on tori; (iii) width and (iv) Hausdorff laws over kappa at fixed
/// eps on bulk-filtered balls. Failing cells are recorded, not skipped.
SweepResult scaling_sweep(const SweepSpec& spec);

} // namespace mbl

#endif
