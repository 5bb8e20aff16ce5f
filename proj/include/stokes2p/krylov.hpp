#pragma once

// Restarted GMRES for matrix-free operators, keeping the full residual history
// so that a failed solve can be reported.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace stokes2p {

struct KrylovResult {
    Eigen::VectorXd x;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history; // relative residual after each inner iteration
};

/// Solves A x = b to relative residual tol. The initial guess is x0 (zero if empty).
inline KrylovResult gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& A, const Eigen::VectorXd& b,
                          double tol, int max_iter, int restart = 60, const Eigen::VectorXd& x0 = {}) {
    KrylovResult res;
    const Eigen::Index n = b.size();
    res.x = x0.size() == n ? x0 : Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x.setZero();
        res.converged = true;
        res.residual_history.push_back(0.0);
        return res;
    }
    restart = std::max(1, std::min<int>(restart, static_cast<int>(n)));

    Eigen::VectorXd r = x0.size() == n ? Eigen::VectorXd(b - A(res.x)) : b;
    double rel = r.norm() / bnorm;
    res.residual_history.push_back(rel);
    if (rel <= tol) {
        res.converged = true;
        return res;
    }

    while (res.iterations < max_iter) {
        const double beta = r.norm();
        Eigen::MatrixXd V(n, restart + 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
        Eigen::VectorXd cs(restart), sn(restart), g = Eigen::VectorXd::Zero(restart + 1);
        V.col(0) = r / beta;
        g[0] = beta;
        int j = 0;
        for (; j < restart && res.iterations < max_iter; ++j) {
            Eigen::VectorXd w = A(V.col(j));
            // modified Gram-Schmidt, one reorthogonalization pass
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) {
                    const double hij = V.col(i).dot(w);
                    H(i, j) += hij;
                    w -= hij * V.col(i);
                }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0) V.col(j + 1) = w / H(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = denom == 0.0 ? 1.0 : H(j, j) / denom;
            sn[j] = denom == 0.0 ? 0.0 : H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++res.iterations;
            rel = std::abs(g[j + 1]) / bnorm;
            res.residual_history.push_back(rel);
            if (rel <= tol || !std::isfinite(rel)) {
                ++j;
                break;
            }
        }
        const Eigen::VectorXd y =
            H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        res.x += V.leftCols(j) * y;
        r = b - A(res.x);
        rel = r.norm() / bnorm;
        res.residual_history.back() = rel;
        if (rel <= tol) {
            res.converged = true;
            return res;
        }
        if (!std::isfinite(rel)) return res;
    }
    return res;
}

} // namespace stokes2p
