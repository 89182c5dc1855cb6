#include "spill/quantreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spill {

double quantile_loss(double u, QuantileLevel tau) {
    if (!std::isfinite(u)) throw DomainError("quantile_loss: non-finite argument");
    return u * (tau.value() - (u < 0.0 ? 1.0 : 0.0));
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Largest alpha >= 0 keeping v + alpha*dv componentwise nonnegative.
double max_step(const VectorXd& v, const VectorXd& dv) {
    double alpha = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
}

struct IpOutcome {
    VectorXd theta; // K coefficients of the design
    int iterations = 0;
    bool converged = false;
    double gap = 0.0;
};

// Frisch-Newton interior point for min_theta sum_i rho_tau(y_i - d_i'theta).
// Solves the bounded-variable LP dual  min c'x  s.t. A x = b, 0 <= x <= 1
// with c = -y, A = D', b = (1-tau) D'1; theta is recovered as minus the
// multiplier on the equality constraint. Primal and dual feasibility hold
// exactly from the start, so only complementarity is driven to zero;
// Mehrotra's corrector is applied whenever a full step is blocked.
IpOutcome solve_ip(const MatrixXd& D, const VectorXd& y, double tau, double tol, int max_iter) {
    const Index m = D.rows();
    const Index K = D.cols();
    const double beta = 0.99995;

    const VectorXd c = -y;
    const VectorXd b = (1.0 - tau) * (D.transpose() * VectorXd::Ones(m));

    VectorXd x = VectorXd::Constant(m, 1.0 - tau);
    VectorXd s = VectorXd::Constant(m, tau);

    Eigen::LDLT<MatrixXd> ldlt(D.transpose() * D);
    VectorXd yd = ldlt.solve(D.transpose() * c);
    VectorXd r = c - D * yd;
    VectorXd z(m), w(m);
    const double eps0 = std::max(tol, 1e-12);
    for (Index i = 0; i < m; ++i) {
        z[i] = std::max(r[i], 0.0) + eps0;
        w[i] = z[i] - r[i]; // keeps A'yd + z - w = c exact
    }

    double gap = c.dot(x) - b.dot(yd) + w.sum();
    int it = 0;
    while (gap > tol && it < max_iter) {
        ++it;
        const VectorXd xinv = x.cwiseInverse();
        const VectorXd sinv = s.cwiseInverse();
        const VectorXd q = (z.cwiseProduct(xinv) + w.cwiseProduct(sinv)).cwiseInverse();
        const VectorXd rzw = z - w;

        MatrixXd AQA = D.transpose() * q.asDiagonal() * D;
        Eigen::LDLT<MatrixXd> f(AQA);
        VectorXd dy = f.solve(D.transpose() * q.cwiseProduct(rzw).matrix());
        if (!dy.allFinite()) {
            AQA.diagonal().array() += 1e-12 * AQA.trace() / static_cast<double>(K) + 1e-300;
            f.compute(AQA);
            dy = f.solve(D.transpose() * q.cwiseProduct(rzw).matrix());
            if (!dy.allFinite()) break;
        }
        VectorXd dx = q.cwiseProduct(D * dy - rzw);
        VectorXd ds = -dx;
        VectorXd dz = -z - xinv.cwiseProduct(z).cwiseProduct(dx);
        VectorXd dw = -w + sinv.cwiseProduct(w).cwiseProduct(dx);

        double dp = std::min(1.0, beta * std::min(max_step(x, dx), max_step(s, ds)));
        double dd = std::min(1.0, beta * std::min(max_step(z, dz), max_step(w, dw)));

        if (std::min(dp, dd) < 1.0) {
            const double mu_now = x.dot(z) + s.dot(w);
            const double g = (x + dp * dx).dot(z + dd * dz) + (s + dp * ds).dot(w + dd * dw);
            const double mu = mu_now * std::pow(g / mu_now, 3) / (2.0 * static_cast<double>(m));

            const VectorXd dxdz = dx.cwiseProduct(dz);
            const VectorXd dsdw = ds.cwiseProduct(dw);
            const VectorXd xi =
                mu * (xinv - sinv) - xinv.cwiseProduct(dxdz) + sinv.cwiseProduct(dsdw);
            dy = f.solve(D.transpose() * q.cwiseProduct(rzw - xi).matrix());
            if (!dy.allFinite()) break;
            dx = q.cwiseProduct(D * dy - rzw + xi);
            ds = -dx;
            dz = mu * xinv - xinv.cwiseProduct(dxdz) - z - xinv.cwiseProduct(z).cwiseProduct(dx);
            dw = mu * sinv - sinv.cwiseProduct(dsdw) - w + sinv.cwiseProduct(w).cwiseProduct(dx);

            dp = std::min(1.0, beta * std::min(max_step(x, dx), max_step(s, ds)));
            dd = std::min(1.0, beta * std::min(max_step(z, dz), max_step(w, dw)));
        }

        x += dp * dx;
        s += dp * ds;
        yd += dd * dy;
        z += dd * dz;
        w += dd * dw;
        gap = c.dot(x) - b.dot(yd) + w.sum();
        if (!std::isfinite(gap)) break;
    }

    IpOutcome out;
    out.theta = -yd;
    out.iterations = it;
    out.gap = gap;
    out.converged = std::isfinite(gap) && gap <= tol;
    return out;
}

} // namespace

QuantileFitResult fit_quantile(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                               QuantileLevel tau, const SolverOptions& opts) {
    const Index m = y.size();
    const Index k = X.cols();
    if (X.rows() != m) throw AlignmentError("fit_quantile: X rows must match y length");
    if (m <= k + 1)
        throw InsufficientDataError("fit_quantile: need more than " + std::to_string(k + 1) +
                                    " observations, got " + std::to_string(m));
    if (!y.allFinite()) throw DomainError("fit_quantile: non-finite response");
    if (!X.allFinite()) throw DomainError("fit_quantile: non-finite regressor");

    // Center/scale regressors and response; the solver then works on O(1)
    // data and the gap tolerance is scale-free.
    VectorXd mean(k), scale(k);
    for (Index j = 0; j < k; ++j) {
        mean[j] = X.col(j).mean();
        const double var = (X.col(j).array() - mean[j]).square().sum() / static_cast<double>(m);
        scale[j] = std::sqrt(var);
        if (scale[j] <= 1e-12 * (1.0 + std::abs(mean[j])))
            throw SingularDesignError("fit_quantile: column " + std::to_string(j) +
                                      " is constant");
    }
    const double y_mean = y.mean();
    double y_scale = std::sqrt((y.array() - y_mean).square().sum() / static_cast<double>(m));
    if (y_scale <= 0.0) y_scale = 1.0;

    MatrixXd D(m, k + 1);
    D.col(0).setOnes();
    for (Index j = 0; j < k; ++j) D.col(j + 1) = (X.col(j).array() - mean[j]) / scale[j];
    const VectorXd ys = (y.array() - y_mean) / y_scale;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(D);
    if (qr.rank() < k + 1)
        throw SingularDesignError("fit_quantile: design rank " + std::to_string(qr.rank()) +
                                  " < " + std::to_string(k + 1));

    const IpOutcome ip = solve_ip(D, ys, tau.value(), opts.tol, opts.max_iter);

    QuantileFitResult res;
    res.coefficients.resize(k);
    for (Index j = 0; j < k; ++j) res.coefficients[j] = y_scale * ip.theta[j + 1] / scale[j];
    res.intercept = y_mean + y_scale * ip.theta[0] - res.coefficients.dot(mean);
    res.iterations = ip.iterations;
    res.converged = ip.converged;
    res.duality_gap = ip.gap;

    VectorXd resid = y - VectorXd::Constant(m, res.intercept) - X * res.coefficients;
    double obj = 0.0;
    for (Index i = 0; i < m; ++i) obj += quantile_loss(resid[i], tau);
    res.objective = obj;

    // At a unique vertex exactly k+1 scaled residuals vanish; more with a
    // positive objective points at a degenerate optimal face.
    const double zero_tol = 1e-7 * (1.0 + ys.cwiseAbs().maxCoeff());
    Index zeros = 0;
    const VectorXd resid_s = ys - D * ip.theta;
    for (Index i = 0; i < m; ++i)
        if (std::abs(resid_s[i]) <= zero_tol) ++zeros;
    res.possibly_nonunique = zeros > k + 1 && obj > zero_tol * y_scale;

    return res;
}

} // namespace spill
