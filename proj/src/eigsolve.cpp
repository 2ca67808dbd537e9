#include "mbl/eigsolve.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mbl {

LanczosResult lanczos_smallest(const MatVec& apply, int dim, int k,
                               const LanczosOptions& opts) {
    if (k <= 0 || k > dim) fail("BadArgument", "lanczos_smallest: bad k");
    const int b = std::max(1, std::min({opts.block, k, dim}));
    int cap = opts.max_basis > 0 ? opts.max_basis
                                 : std::min(dim, std::max(3 * k + 32, 96));
    cap = std::max(cap, std::min(dim, k + 2 * b));
    cap = std::min(cap, dim);
    if (static_cast<double>(cap) * dim * 32.0 > 2.0e9)
        fail("ConvergenceFailure", "lanczos basis would exceed the memory budget");

    std::mt19937 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXcd V(dim, cap);   // orthonormal basis
    Eigen::MatrixXcd AV(dim, cap);  // A * basis
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(cap, cap);
    Eigen::VectorXcd tmp(dim);
    int nbasis = 0;

    auto orthonormalize_last = [&]() -> double {
        const int col = nbasis;
        double nrm = 0.0;
        for (int pass = 0; pass < 2; ++pass) {
            if (col > 0) {
                Eigen::VectorXcd proj = V.leftCols(col).adjoint() * V.col(col);
                V.col(col).noalias() -= V.leftCols(col) * proj;
            }
            nrm = V.col(col).norm();
        }
        if (nrm > 1e-13) V.col(col) /= nrm;
        return nrm;
    };

    auto push_column = [&](bool fresh_random) {
        if (fresh_random)
            for (int i = 0; i < dim; ++i) V(i, nbasis) = cplx(gauss(rng), gauss(rng));
        double nrm = orthonormalize_last();
        if (nrm <= 1e-13) {
            for (int i = 0; i < dim; ++i) V(i, nbasis) = cplx(gauss(rng), gauss(rng));
            orthonormalize_last();
        }
        apply(V.col(nbasis), tmp);
        AV.col(nbasis) = tmp;
        // extend the projected matrix
        T.block(0, nbasis, nbasis + 1, 1) =
            V.leftCols(nbasis + 1).adjoint() * AV.col(nbasis);
        T.block(nbasis, 0, 1, nbasis) =
            T.block(0, nbasis, nbasis, 1).adjoint();
        T(nbasis, nbasis) = cplx(T(nbasis, nbasis).real(), 0.0);
        ++nbasis;
    };

    for (int j = 0; j < std::min(b, cap); ++j) push_column(true);

    LanczosResult res;
    int cycles = 0;
    const int max_cycles = 2000;
    for (;;) {
        ++cycles;
        // grow by one chunk of block expansions seeded by A * (recent columns)
        const int chunk = std::max(b, 16);
        int grown = 0;
        while (grown < chunk && nbasis < cap) {
            const int src = nbasis - b >= 0 ? nbasis - b : nbasis - 1;
            V.col(nbasis) = AV.col(src);
            push_column(false);
            ++grown;
        }

        Eigen::MatrixXcd Tn = T.topLeftCorner(nbasis, nbasis);
        Tn = (Tn + Tn.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Tn);
        const double op_scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());

        const int nrit = std::min(k, nbasis);
        Eigen::MatrixXcd Y = V.leftCols(nbasis) * es.eigenvectors().leftCols(nrit);
        Eigen::MatrixXcd R = AV.leftCols(nbasis) * es.eigenvectors().leftCols(nrit);
        double worst = 0.0;
        for (int j = 0; j < nrit; ++j) {
            const double r = (R.col(j) - es.eigenvalues()(j) * Y.col(j)).norm();
            worst = std::max(worst, r);
        }
        const bool converged = (nbasis >= k) && worst <= opts.tol * op_scale;
        if (converged) {
            res.values = es.eigenvalues().head(nrit);
            if (opts.want_vectors) res.vectors = Y;
            res.iterations = cycles;
            return res;
        }
        if (cycles >= max_cycles)
            fail("ConvergenceFailure",
                 "lanczos: residual " + std::to_string(worst) + " after " +
                     std::to_string(cycles) + " cycles");

        if (nbasis >= cap) {
            // thick restart: keep the leading Ritz vectors; T = V^H A V stays
            // exact because V_new are Ritz vectors of the projected problem
            const int nkeep = std::min(std::max(k + 2 * b, k + 16), cap - chunk);
            const Eigen::MatrixXcd S = es.eigenvectors().leftCols(nkeep);
            Eigen::MatrixXcd Vk = V.leftCols(nbasis) * S;
            Eigen::MatrixXcd AVk = AV.leftCols(nbasis) * S;
            V.leftCols(nkeep) = Vk;
            AV.leftCols(nkeep) = AVk;
            T.setZero();
            for (int j = 0; j < nkeep; ++j) T(j, j) = es.eigenvalues()(j);
            nbasis = nkeep;
        }
    }
}

} // namespace mbl

namespace mbl {

LanczosResult davidson_smallest(const MatVec& apply, const Eigen::VectorXd& diag,
                                int dim, int k, const LanczosOptions& opts) {
    if (k <= 0 || k > dim) fail("BadArgument", "davidson_smallest: bad k");
    if (diag.size() != dim) fail("BadArgument", "davidson_smallest: diag size mismatch");
    const int b = std::max(2, std::min({std::max(opts.block, k), dim, 8}));
    const int cap = std::min(dim, std::max(4 * k + 16, 32));

    Eigen::MatrixXcd V(dim, cap), AV(dim, cap);
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(cap, cap);
    Eigen::VectorXcd tmp(dim);
    int nbasis = 0;

    auto orthonormalize_last = [&]() -> double {
        const int col = nbasis;
        double nrm = 0.0;
        for (int pass = 0; pass < 2; ++pass) {
            if (col > 0) {
                Eigen::VectorXcd proj = V.leftCols(col).adjoint() * V.col(col);
                V.col(col).noalias() -= V.leftCols(col) * proj;
            }
            nrm = V.col(col).norm();
        }
        if (nrm > 1e-13) V.col(col) /= nrm;
        return nrm;
    };
    auto push = [&](const Eigen::VectorXcd& cand) -> bool {
        if (nbasis >= cap) return false;
        V.col(nbasis) = cand;
        if (orthonormalize_last() <= 1e-13) return false;
        apply(V.col(nbasis), tmp);
        AV.col(nbasis) = tmp;
        T.block(0, nbasis, nbasis + 1, 1) =
            V.leftCols(nbasis + 1).adjoint() * AV.col(nbasis);
        T.block(nbasis, 0, 1, nbasis) = T.block(0, nbasis, nbasis, 1).adjoint();
        T(nbasis, nbasis) = cplx(T(nbasis, nbasis).real(), 0.0);
        ++nbasis;
        return true;
    };

    // deterministic start: unit vectors at the smallest diagonal entries
    {
        std::vector<int> idx(dim);
        for (int i = 0; i < dim; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](int i, int j) { return diag(i) != diag(j) ? diag(i) < diag(j) : i < j; });
        for (int j = 0; j < std::min(k + b, cap); ++j) {
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
            e(idx[j]) = 1.0;
            push(e);
        }
    }

    const double dscale = std::max(1.0, diag.cwiseAbs().maxCoeff());
    LanczosResult res;
    for (int cycle = 0; cycle < 500; ++cycle) {
        Eigen::MatrixXcd Tn = T.topLeftCorner(nbasis, nbasis);
        Tn = (Tn + Tn.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Tn);
        const double op_scale =
            std::max(dscale, es.eigenvalues().cwiseAbs().maxCoeff());
        const int nrit = std::min(k, nbasis);
        Eigen::MatrixXcd Y = V.leftCols(nbasis) * es.eigenvectors().leftCols(nrit);
        Eigen::MatrixXcd R = AV.leftCols(nbasis) * es.eigenvectors().leftCols(nrit);
        for (int j = 0; j < nrit; ++j) R.col(j) -= es.eigenvalues()(j) * Y.col(j);
        double worst = 0.0;
        for (int j = 0; j < nrit; ++j) worst = std::max(worst, R.col(j).norm());
        if (nbasis >= k && worst <= opts.tol * op_scale) {
            res.values = es.eigenvalues().head(nrit);
            if (opts.want_vectors) res.vectors = Y;
            res.iterations = cycle + 1;
            return res;
        }

        if (nbasis + b > cap) {
            // thick restart with the leading Ritz vectors
            const int nkeep = std::min(k + b, cap - b);
            const Eigen::MatrixXcd S = es.eigenvectors().leftCols(nkeep);
            Eigen::MatrixXcd Vk = V.leftCols(nbasis) * S;
            Eigen::MatrixXcd AVk = AV.leftCols(nbasis) * S;
            V.leftCols(nkeep) = Vk;
            AV.leftCols(nkeep) = AVk;
            T.setZero();
            for (int j = 0; j < nkeep; ++j) T(j, j) = es.eigenvalues()(j);
            nbasis = nkeep;
        }

        // preconditioned corrections for the worst unconverged Ritz pairs
        int added = 0;
        for (int j = 0; j < nrit && added < b; ++j) {
            if (R.col(j).norm() <= opts.tol * op_scale) continue;
            Eigen::VectorXcd t(dim);
            const double lam = es.eigenvalues()(j);
            for (int i = 0; i < dim; ++i) {
                double den = lam - diag(i);
                if (std::abs(den) < 1e-6 * op_scale)
                    den = (den >= 0 ? 1.0 : -1.0) * 1e-6 * op_scale;
                t(i) = R.col(j)(i) / den;
            }
            if (push(t)) ++added;
        }
        if (added == 0) {
            // stagnation: inject a deterministic fresh direction
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
            e((cycle * 37) % dim) = 1.0;
            if (!push(e))
                fail("ConvergenceFailure", "davidson stagnated at residual " +
                                               std::to_string(worst));
        }
    }
    fail("ConvergenceFailure", "davidson: iteration cap reached");
}

} // namespace mbl
