#ifndef MBL_FFT_HPP
#define MBL_FFT_HPP

#include <vector>

#include "mbl/common.hpp"

namespace mbl {

// In-place radix-2 DIT transform, sign convention sum_k a[k] e^{-2*pi*i*j*k/n}
// (inverse uses +i and divides by n). n must be a power of two.
void fft(std::vector<cplx>& a, bool inverse);

// 2D transform of a row-major rows*cols grid; both dimensions powers of two.
void fft_2d(std::vector<cplx>& a, std::size_t rows, std::size_t cols, bool inverse);

bool is_pow2(std::size_t n);

} // namespace mbl

#endif
