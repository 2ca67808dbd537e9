#ifndef MBL_EIGSOLVE_HPP
#define MBL_EIGSOLVE_HPP

#include <Eigen/Dense>
#include <functional>

#include "mbl/common.hpp"

namespace mbl {

using MatVec = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct LanczosOptions {
    int block = 4;            // block size; >1 resolves small multiplicities
    double tol = 1e-10;       // residual tolerance relative to the operator scale
    int max_basis = 0;        // 0 = automatic
    unsigned seed = 12345u;   // deterministic start block
    bool want_vectors = true;
};

struct LanczosResult {
    Eigen::VectorXd values;   // ascending, length k
    Eigen::MatrixXcd vectors; // dim x k (empty unless requested)
    int iterations = 0;
};

/// Bottom-k eigenpairs of a Hermitian operator by block Lanczos with full
/// reorthogonalization. Throws ConvergenceFailure when the basis cap is hit
/// before the requested residual tolerance is met.
LanczosResult lanczos_smallest(const MatVec& apply, int dim, int k,
                               const LanczosOptions& opts = {});

/// Diagonally preconditioned block Davidson; much faster than Lanczos when
/// the diagonal dominates (plane-wave fiber matrices).
LanczosResult davidson_smallest(const MatVec& apply, const Eigen::VectorXd& diag,
                                int dim, int k, const LanczosOptions& opts = {});

} // namespace mbl

#endif
