#ifndef MBL_EFFECTIVE_HPP
#define MBL_EFFECTIVE_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <variant>
#include <vector>

#include "mbl/bloch.hpp"
#include "mbl/lattice.hpp"
#include "mbl/magnetic_phase.hpp"
#include "mbl/wannier.hpp"

namespace mbl {

/// Finite realization of l^2(Gamma): a truncated ball, or a q x q torus of
/// unit cells with periodic magnetic boundary conditions (requires kappa = 0
/// and rational flux eps*B0*|E| = 2 pi p / q).
struct BallGeometry {
    double radius = 0.0;
};
struct TorusGeometry {
    int q = 0;
};
using Geometry = std::variant<BallGeometry, TorusGeometry>;

struct PeierlsMatrix {
    std::vector<LatticeSite> sites;
    Eigen::SparseMatrix<cplx> M;
    double eps = 0.0;
    double kappa = 0.0;
    Geometry geometry;
    HoppingSet hoppings;

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(M); }
    int dim() const { return static_cast<int>(M.rows()); }
    double hermitian_defect() const;
};

/// Rational flux check: returns p such that eps*B0*|E| = 2 pi p / q within
/// 1e-9, or nullopt.
std::optional<int> rational_flux_p(double eps, double B0, const Lattice& lat, int q);

PeierlsMatrix build_effective_matrix(const HoppingSet& h, const Lattice& lat,
                                     const FieldSpec& field, double eps, double kappa,
                                     const Geometry& geom);

/// Full torus spectrum (all multiplicities) via the y-translation symmetry of
/// the Landau-gauge phases: q dense blocks of dimension cells*q. cells > 1
/// extends the torus to (cells*q) x q so the magnetic Brillouin zone is
/// sampled in both directions (a q x q torus holds a single magnetic cell
/// along n1 and cannot resolve subband dispersion).
std::vector<double> torus_spectrum(const HoppingSet& h, const Lattice& lat,
                                   const FieldSpec& field, double eps, int q,
                                   int cells = 1);

/// Quasi Bloch function lambda^eps on a theta grid with its harmonic data.
struct QuasiBlochData {
    ThetaGrid grid;
    std::vector<double> lambda;         // Re lambda^eps per grid point
    double max_imag = 0.0;              // largest |Im| encountered (diagnostic)
    HarmonicData harmonic;
    std::vector<double> rho;            // (lambda^eps - lambda0)/eps when supplied
};

QuasiBlochData quasi_bloch(const HoppingSet& h, const Lattice& lat, int grid_n,
                           std::span<const double> lambda0_reference = {},
                           double eps_for_rho = 0.0);

HarmonicData harmonic_data(const QuasiBlochData& q);

/// Landau-level centers min_value + (2n+1) eps m B0, n = 0..N.
std::vector<double> landau_prediction(const HarmonicData& hd, double B0, double eps, int N);

} // namespace mbl

#endif
