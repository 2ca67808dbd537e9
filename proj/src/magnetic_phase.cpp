#include "mbl/magnetic_phase.hpp"

#include <cmath>

#include "mbl/lattice.hpp"
#include "mbl/numerics.hpp"

namespace mbl {

double FieldSpec::profile_value(const Vec2& x) const {
    double v = 0.0;
    for (const auto& t : profile) v += t.amp * std::cos(dot(t.k, x) + t.phase);
    return v;
}

FieldSpec make_field(double B0, std::vector<FieldTerm> profile) {
    FieldSpec f;
    f.B0 = B0;
    f.profile = std::move(profile);
    double s = 0.0;
    for (const auto& t : f.profile) s += std::abs(t.amp);
    f.sup_norm = s;
    return f;
}

namespace {

// int_0^1 s cos(a s + phi) ds, with the small-|a| limit handled by series.
double moment_integral(double a, double phi) {
    if (std::abs(a) < 1e-3) {
        const double c = std::cos(phi), s = std::sin(phi);
        const double a2 = a * a;
        // cos/2 - a sin/3 - a^2 cos/8 + a^3 sin/30 + a^4 cos/144
        return c / 2.0 - a * s / 3.0 - a2 * c / 8.0 + a2 * a * s / 30.0 + a2 * a2 * c / 144.0;
    }
    return (std::cos(a + phi) - std::cos(phi)) / (a * a) + std::sin(a + phi) / a;
}

} // namespace

Vec2 poincare_gauge_potential(const FieldSpec& field, const Vec2& x) {
    double m = 0.0;
    for (const auto& t : field.profile) m += t.amp * moment_integral(dot(t.k, x), t.phase);
    return Vec2(-x.y, x.x) * m;
}

namespace {

// int_[x,y] A(.) dl for the Poincare-gauge profile potential, scaled argument
// A(eps * z). Adaptive Gauss-Legendre: doubles the order until stable to 1e-10.
double profile_line_integral(const FieldSpec& field, const Vec2& x, const Vec2& y,
                             double eps) {
    if (field.profile.empty()) return 0.0;
    const Vec2 d = y - x;
    auto integrand = [&](double t) {
        const Vec2 z = (x + d * t) * eps;
        return dot(poincare_gauge_potential(field, z), d);
    };
    double prev = 0.0;
    for (int order = 8; order <= 512; order *= 2) {
        const GaussRule& gr = gauss_legendre_01(order);
        double acc = 0.0;
        for (int i = 0; i < order; ++i) acc += gr.weights[i] * integrand(gr.nodes[i]);
        if (order > 8 && std::abs(acc - prev) < 1e-10) return acc;
        prev = acc;
    }
    return prev;
}

// Symmetric degree-5 rule on a triangle (7 points), applied adaptively by
// uniform subdivision until stable to 1e-10.
double triangle_quad(const FieldSpec& field, const Vec2& a, const Vec2& b, const Vec2& c,
                     double eps, int depth) {
    static const double w0 = 9.0 / 40.0;
    static const double w1 = (155.0 - std::sqrt(15.0)) / 1200.0;
    static const double w2 = (155.0 + std::sqrt(15.0)) / 1200.0;
    static const double g1 = (6.0 - std::sqrt(15.0)) / 21.0;
    static const double g2 = (6.0 + std::sqrt(15.0)) / 21.0;
    struct P { double l1, l2, w; };
    static const P pts[7] = {
        {1.0 / 3.0, 1.0 / 3.0, w0},
        {g1, g1, w1}, {1.0 - 2.0 * g1, g1, w1}, {g1, 1.0 - 2.0 * g1, w1},
        {g2, g2, w2}, {1.0 - 2.0 * g2, g2, w2}, {g2, 1.0 - 2.0 * g2, w2},
    };
    const double area = 0.5 * wedge(b - a, c - a); // signed
    auto rule = [&](const Vec2& p, const Vec2& q, const Vec2& r) {
        double acc = 0.0;
        for (const auto& pt : pts) {
            const Vec2 u = p * (1.0 - pt.l1 - pt.l2) + q * pt.l1 + r * pt.l2;
            acc += pt.w * field.profile_value(u * eps);
        }
        return acc;
    };
    double coarse = rule(a, b, c) * area;
    if (field.profile.empty()) return 0.0;
    // refine by subdivision at the edge midpoints
    const Vec2 ab = (a + b) * 0.5, bc = (b + c) * 0.5, ca = (c + a) * 0.5;
    const double qa = 0.25 * area;
    double fine = rule(a, ab, ca) * qa + rule(ab, b, bc) * qa + rule(ca, bc, c) * qa +
                  rule(ab, bc, ca) * qa;
    if (std::abs(fine - coarse) < 1e-10 || depth >= 6) return fine;
    return triangle_quad(field, a, ab, ca, eps, depth + 1) +
           triangle_quad(field, ab, b, bc, eps, depth + 1) +
           triangle_quad(field, ca, bc, c, eps, depth + 1) +
           triangle_quad(field, ab, bc, ca, eps, depth + 1);
}

} // namespace

cplx peierls_phase(const FieldSpec& field, const Vec2& x, const Vec2& y, double eps,
                   double kappa) {
    double arg = eps * (field.B0 / 2.0) * wedge(x, y);
    if (kappa != 0.0) arg += kappa * profile_line_integral(field, x, y, eps);
    return std::polar(1.0, -arg);
}

cplx triangle_flux(const FieldSpec& field, const Vec2& x, const Vec2& y, const Vec2& z,
                   double eps, double kappa) {
    const double area = 0.5 * wedge(y - x, z - x);
    double flux = eps * field.B0 * area;
    if (kappa != 0.0) flux += kappa * eps * triangle_quad(field, x, y, z, eps, 0);
    return std::polar(1.0, -flux);
}

} // namespace mbl
