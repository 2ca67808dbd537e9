#ifndef MBL_NUMERICS_HPP
#define MBL_NUMERICS_HPP

#include <span>
#include <vector>

#include "mbl/common.hpp"

namespace mbl {

/// Coefficients of f(d) ~ c + <b,d> + d^T Q d fitted by least squares.
struct QuadFit2D {
    double c = 0.0;
    Vec2 b;
    double q11 = 0.0, q12 = 0.0, q22 = 0.0; // quadratic-form coefficients
};

QuadFit2D fit_quadratic_2d(std::span<const Vec2> points, std::span<const double> values);

/// Least-squares power law y = prefactor * x^exponent on log-log data.
/// residual is the RMS of the log-space misfit.
struct LogLogFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;
    std::vector<double> abscissa;
    std::vector<double> values;
};

LogLogFit loglog_fit(std::span<const double> xs, std::span<const double> ys);

/// Straight-line least squares y = a + b*x; returns {a, b, rms_residual}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual = 0.0;
};

LineFit line_fit(std::span<const double> xs, std::span<const double> ys);

/// Gauss-Legendre nodes/weights on [0,1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre_01(int order);

} // namespace mbl

#endif
