#ifndef MBL_BLOCH_HPP
#define MBL_BLOCH_HPP

#include <Eigen/Dense>
#include <map>
#include <span>
#include <vector>

#include "mbl/common.hpp"
#include "mbl/lattice.hpp"

namespace mbl {

/// Real trigonometric-polynomial potential given by its Fourier coefficients
/// on the dual lattice: V(x) = sum_g V(g) e^{i<gamma*(g),x>}.
class PotentialSpec {
public:
    PotentialSpec() = default;
    explicit PotentialSpec(std::map<IntPair, cplx> coeffs);

    const std::map<IntPair, cplx>& coefficients() const { return coeffs_; }
    cplx coefficient(IntPair g) const;
    int support_radius() const { return support_; } // max |g|_inf over stored terms
    bool empty() const { return coeffs_.empty(); }

    double value(const Lattice& lat, const Vec2& x) const;

private:
    std::map<IntPair, cplx> coeffs_;
    int support_ = 0;
};

/// V = 2A(cos x1 + cos x2) on the 2pi-square lattice convention:
/// coefficients A at the four unit dual indices.
PotentialSpec separable_cosine_potential(double amplitude);

/// Uniform half-open sampling of the dual elementary cell E*:
/// theta(i1,i2) = t1*dual1 + t2*dual2 with t_j = (i_j - n/2)/n.
struct ThetaGrid {
    Lattice lat;
    int n = 0;

    std::size_t size() const { return static_cast<std::size_t>(n) * n; }
    std::size_t flat(int i1, int i2) const {
        return static_cast<std::size_t>(i1) * n + i2;
    }
    Vec2 fractional(int i1, int i2) const {
        return {(i1 - n / 2) / double(n), (i2 - n / 2) / double(n)};
    }
    Vec2 theta(int i1, int i2) const {
        const Vec2 t = fractional(i1, i2);
        return lat.dual1 * t.x + lat.dual2 * t.y;
    }
    std::size_t center_index() const { return flat(n / 2, n / 2); }
};

struct FiberHamiltonian {
    Vec2 theta;
    int cutoff = 0;
    Eigen::MatrixXcd matrix; // indexed by dual indices with |g|_inf <= cutoff

    int dim() const { return (2 * cutoff + 1) * (2 * cutoff + 1); }
    int g_index(IntPair g) const {
        return (g.a + cutoff) * (2 * cutoff + 1) + (g.b + cutoff);
    }
    IntPair g_of_index(int i) const {
        const int w = 2 * cutoff + 1;
        return {i / w - cutoff, i % w - cutoff};
    }
};

/// Bands and gauge data over a ThetaGrid. vectors[i] holds the band-0
/// plane-wave coefficients at grid point i (empty when not stored).
struct BandStructure {
    ThetaGrid grid;
    PotentialSpec potential;
    int cutoff = 0;
    int nbands = 0;
    std::vector<std::vector<double>> bands;  // [nbands][grid.size()]
    std::vector<Eigen::VectorXcd> vectors;   // band 0 coefficients per grid point
    bool gauge_fixed = false;
    double min_adjacent_overlap = 1.0; // diagnostic set by fix_gauge

    std::span<const double> band(int j) const { return bands.at(j); }
};

enum class HypothesisClass { Gap, Overlap, Crossing };

const char* to_string(HypothesisClass h);

/// Harmonic data of a band minimum: lambda(theta) ~ min_value +
/// (theta-theta_min)^T Q (theta-theta_min), with Q the quadratic-form matrix
/// (half the Hessian), eigenvalues m1 <= m2 and m = sqrt(m1*m2).
struct HarmonicData {
    Vec2 theta_min;
    double q11 = 0.0, q12 = 0.0, q22 = 0.0;
    double m1 = 0.0, m2 = 0.0, m = 0.0;
    double min_value = 0.0;
};

FiberHamiltonian build_fiber_hamiltonian(const Vec2& theta, const PotentialSpec& pot,
                                         const Lattice& lat, int cutoff);

BandStructure solve_bands(const PotentialSpec& pot, const Lattice& lat, int grid_n,
                          int nbands, int cutoff, bool store_vectors = true);

HypothesisClass classify_hypothesis(const BandStructure& bs, double tol);

/// Default crossing tolerance: 1e-9 * energy scale of the first two bands.
double default_classify_tol(const BandStructure& bs);

/// Quadratic fit around the grid argmin (3x3 stencil, Richardson-refined by
/// the 5x5 stencil). values is row-major over the grid.
HarmonicData band_minimum_hessian(std::span<const double> values, const ThetaGrid& grid);

struct GroundStateBound {
    double C = 0.0;      // (min u0 / max u0)^2
    bool holds = false;  // lambda0(theta) - lambda0(0) >= C |theta|^2 on the grid
    double margin = 0.0; // worst value of the difference
};

GroundStateBound ground_state_bound_check(const PotentialSpec& pot, const Lattice& lat,
                                          const BandStructure& bs, int cutoff,
                                          int real_grid = 64);

} // namespace mbl

#endif
