#ifndef MBL_WANNIER_HPP
#define MBL_WANNIER_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "mbl/bloch.hpp"
#include "mbl/common.hpp"
#include "mbl/lattice.hpp"
#include "mbl/magnetic_phase.hpp"

namespace mbl {

/// Principal Wannier function sampled on a lattice-aligned grid
/// x = (m e1 + n e2)/K with |x| <= R_w (zero outside the disk).
struct WannierFunction {
    Lattice lat;
    int K = 0;                // grid divisions per cell edge
    int M = 0;                // indices m,n run over [-M, M]
    double R_w = 0.0;         // disk radius
    double cell_measure = 0.0; // quadrature weight |e1 ^ e2| / K^2
    std::vector<cplx> values; // (2M+1)^2 row-major

    double decay_rate = 0.0;      // fitted exponential rate (inverse length)
    double decay_prefactor = 0.0; // fitted amplitude at r=0
    double decay_residual = 0.0;  // relative residual of the log-linear fit

    int side() const { return 2 * M + 1; }
    std::size_t flat(int m, int n) const {
        return static_cast<std::size_t>(m + M) * side() + (n + M);
    }
    bool in_window(int m, int n) const {
        return m >= -M && m <= M && n >= -M && n <= M;
    }
    cplx value_at(int m, int n) const {
        return in_window(m, n) ? values[flat(m, n)] : cplx(0.0, 0.0);
    }
    Vec2 position(int m, int n) const {
        return (lat.e1 * double(m) + lat.e2 * double(n)) * (1.0 / K);
    }
};

/// Lattice hopping amplitudes gamma -> h(gamma) with truncation metadata.
struct HoppingSet {
    Lattice lat;
    std::map<IntPair, cplx> entries;
    double trunc_radius = 0.0;
    double trunc_tol = 0.0;
    double max_omitted = 0.0; // largest dropped magnitude seen at truncation

    cplx value(IntPair g) const {
        auto it = entries.find(g);
        return it == entries.end() ? cplx(0.0, 0.0) : it->second;
    }
    /// max |h(-g) - conj(h(g))| over stored entries
    double hermitian_defect() const;
    void hermitian_symmetrize();
};

/// Overlap matrix of magnetically translated Wannier functions and its
/// Loewdin inverse square root. Keeps the field so downstream phases match.
struct GramianData {
    std::vector<LatticeSite> sites;
    Eigen::MatrixXcd G;
    Eigen::MatrixXcd F; // G^{-1/2}
    FieldSpec field;
    double eps = 0.0;
    double kappa = 0.0;
    double min_eigenvalue = 0.0;
};

/// Rescales every band-0 eigenvector by a unit scalar so its overlap with the
/// theta=0 reference is real positive; falls back to parallel transport along
/// a grid spanning tree when the reference overlap degenerates.
BandStructure fix_gauge(const BandStructure& bs);

WannierFunction synthesize_wannier(const BandStructure& bs, const Lattice& lat,
                                   double R_w, double spacing);

HoppingSet hoppings_from_band(std::span<const double> band0, const ThetaGrid& grid,
                              double trunc_tol);

GramianData magnetic_gramian(const WannierFunction& w, const std::vector<LatticeSite>& sites,
                             double eps, double kappa, const FieldSpec& field);

/// F = G^{-1/2} by spectral decomposition; NearSingularGramian below 1e-10.
Eigen::MatrixXcd loewdin_inverse_sqrt(const Eigen::MatrixXcd& G);

/// Constant-field magnetic hoppings h^eps(gamma) from the orthonormalized
/// magnetic Wannier function, H^eps applied by 4th-order finite differences.
/// gram must be built at kappa = 0. When band_reference is given and eps == 0
/// the output is compared against it (GridTooCoarse beyond 1e-4).
HoppingSet magnetic_hoppings(const WannierFunction& w, const GramianData& gram,
                             const PotentialSpec& pot, const Lattice& lat, double eps,
                             double hop_radius, double trunc_tol,
                             const HoppingSet* band_reference = nullptr);

} // namespace mbl

#endif
