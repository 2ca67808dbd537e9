#ifndef MBL_TESTS_ORACLE_BANDS_1D_HPP
#define MBL_TESTS_ORACLE_BANDS_1D_HPP

// Independent 1D plane-wave oracle for -d^2/dx^2 + 2A cos(x) on the 2*pi
// circle. Used to cross-check the separable 2D solver; deliberately shares no
// code with the library implementation.

#include <Eigen/Dense>
#include <vector>

namespace oracle {

/// mu[i][j]: j-th eigenvalue at theta = (i - n/2)/n for i in [0, n).
inline std::vector<std::vector<double>> bands_1d(double A, int cutoff, int n, int nbands) {
    const int dim = 2 * cutoff + 1;
    std::vector<std::vector<double>> out(n);
    for (int i = 0; i < n; ++i) {
        const double theta = (i - n / 2) / static_cast<double>(n);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
        for (int g = -cutoff; g <= cutoff; ++g) {
            H(g + cutoff, g + cutoff) = (theta + g) * (theta + g);
            if (g + 1 <= cutoff) {
                H(g + cutoff, g + 1 + cutoff) = A;
                H(g + 1 + cutoff, g + cutoff) = A;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        out[i].assign(es.eigenvalues().data(), es.eigenvalues().data() + nbands);
    }
    return out;
}

} // namespace oracle

#endif
