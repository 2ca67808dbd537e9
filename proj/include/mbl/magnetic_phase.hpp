#ifndef MBL_MAGNETIC_PHASE_HPP
#define MBL_MAGNETIC_PHASE_HPP

#include <vector>

#include "mbl/common.hpp"

namespace mbl {

/// One trigonometric term amp*cos(<k,x> + phase) of the slow field profile.
struct FieldTerm {
    Vec2 k;
    double amp = 0.0;
    double phase = 0.0;
};

/// Two-scale magnetic field eps*B0 + kappa*eps*B(eps*x) with B a
/// trigonometric polynomial.
struct FieldSpec {
    double B0 = 0.0;
    std::vector<FieldTerm> profile;
    double sup_norm = 0.0; // bound on |B| over the plane

    /// Profile value B(x).
    double profile_value(const Vec2& x) const;
};

FieldSpec make_field(double B0, std::vector<FieldTerm> profile);

/// Poincare-gauge potential of the profile: a(x) = (int_0^1 s B(s x) ds)(-x2, x1),
/// evaluated in closed form per trigonometric term.
Vec2 poincare_gauge_potential(const FieldSpec& field, const Vec2& x);

/// Unit factor exp(-i int_[x,y] A^{eps,kappa}); the constant-field part of the
/// segment integral is eps*(B0/2)(x ^ y), the profile part is integrated by
/// adaptive Gauss-Legendre quadrature.
cplx peierls_phase(const FieldSpec& field, const Vec2& x, const Vec2& y, double eps,
                   double kappa);

/// exp(-i flux) through the oriented triangle <x,y,z>.
cplx triangle_flux(const FieldSpec& field, const Vec2& x, const Vec2& y, const Vec2& z,
                   double eps, double kappa);

} // namespace mbl

#endif
