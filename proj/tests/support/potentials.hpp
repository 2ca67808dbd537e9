#ifndef MBL_TESTS_POTENTIALS_HPP
#define MBL_TESTS_POTENTIALS_HPP

#include <map>

#include "mbl/bloch.hpp"

namespace testpot {

/// Real potential without inversion symmetry about the well:
/// 2 cos x1 + 2 cos x2 + 1.2 cos(x1 + x2 + 0.9). Needed wherever a
/// first-order-in-eps coefficient must be nonzero (parity kills it for the
/// separable cosine).
inline mbl::PotentialSpec asymmetric_reference() {
    std::map<mbl::IntPair, mbl::cplx> m;
    m[{1, 0}] = 1.0;
    m[{-1, 0}] = 1.0;
    m[{0, 1}] = 1.0;
    m[{0, -1}] = 1.0;
    m[{1, 1}] = 0.6 * std::polar(1.0, 0.9);
    m[{-1, -1}] = 0.6 * std::polar(1.0, -0.9);
    return mbl::PotentialSpec(std::move(m));
}

} // namespace testpot

#endif
