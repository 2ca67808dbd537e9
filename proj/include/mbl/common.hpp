#ifndef MBL_COMMON_HPP
#define MBL_COMMON_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace mbl {

using cplx = std::complex<double>;

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Planar vector used for positions, quasi-momenta and wave vectors.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double xx, double yy) : x(xx), y(yy) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

/// Integer lattice index (coefficients w.r.t. the lattice generators).
struct IntPair {
    int a = 0;
    int b = 0;
    friend bool operator==(const IntPair&, const IntPair&) = default;
    friend auto operator<=>(const IntPair&, const IntPair&) = default;
};

/// Error with a machine-readable kind, used for every documented failure mode.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

[[noreturn]] inline void fail(std::string kind, const std::string& msg) {
    throw Error(std::move(kind), msg);
}

} // namespace mbl

#endif
