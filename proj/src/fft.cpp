#include "mbl/fft.hpp"

#include <cmath>

#include "mbl/threading.hpp"

namespace mbl {

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) fail("FftSize", "length must be a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sgn * two_pi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= inv;
    }
}

void fft_2d(std::vector<cplx>& a, std::size_t rows, std::size_t cols, bool inverse) {
    if (a.size() != rows * cols) fail("FftSize", "grid size mismatch");
    parallel_for(rows, [&](std::size_t r) {
        std::vector<cplx> row(a.begin() + r * cols, a.begin() + (r + 1) * cols);
        fft(row, inverse);
        std::copy(row.begin(), row.end(), a.begin() + r * cols);
    });
    parallel_for(cols, [&](std::size_t c) {
        std::vector<cplx> col(rows);
        for (std::size_t r = 0; r < rows; ++r) col[r] = a[r * cols + c];
        fft(col, inverse);
        for (std::size_t r = 0; r < rows; ++r) a[r * cols + c] = col[r];
    });
}

} // namespace mbl
