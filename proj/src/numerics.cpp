#include "mbl/numerics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

namespace mbl {

QuadFit2D fit_quadratic_2d(std::span<const Vec2> points, std::span<const double> values) {
    const std::size_t n = points.size();
    if (n != values.size() || n < 6) fail("FitUnderdetermined", "need >= 6 samples");
    Eigen::MatrixXd A(n, 6);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = points[i].x, dy = points[i].y;
        A(i, 0) = 1.0;
        A(i, 1) = dx;
        A(i, 2) = dy;
        A(i, 3) = dx * dx;
        A(i, 4) = dx * dy;
        A(i, 5) = dy * dy;
        rhs(i) = values[i];
    }
    Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
    QuadFit2D f;
    f.c = sol(0);
    f.b = {sol(1), sol(2)};
    f.q11 = sol(3);
    f.q12 = sol(4) / 2.0; // stored so that the form is q11 x^2 + 2 q12 xy + q22 y^2
    f.q22 = sol(5);
    return f;
}

LineFit line_fit(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) fail("FitUnderdetermined", "need >= 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double d = n * sxx - sx * sx;
    if (std::abs(d) < 1e-300) fail("FitUnderdetermined", "degenerate abscissa");
    LineFit out;
    out.slope = (n * sxy - sx * sy) / d;
    out.intercept = (sy - out.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - out.intercept - out.slope * xs[i];
        ss += r * r;
    }
    out.residual = std::sqrt(ss / n);
    return out;
}

LogLogFit loglog_fit(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) fail("FitUnderdetermined", "need >= 2 samples");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0) fail("FitDomain", "log-log fit needs positive data");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    LineFit lf = line_fit(lx, ly);
    LogLogFit out;
    out.exponent = lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.residual = lf.residual;
    out.abscissa.assign(xs.begin(), xs.end());
    out.values.assign(ys.begin(), ys.end());
    return out;
}

namespace {

GaussRule compute_gauss(int order) {
    // Newton iteration on Legendre polynomials over [-1,1], then mapped to [0,1].
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.nodes[order - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[order - 1 - i] = 0.5 * w;
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre_01(int order) {
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss(order)).first;
    return it->second;
}

} // namespace mbl
