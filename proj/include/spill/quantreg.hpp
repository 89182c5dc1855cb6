#pragma once

#include <Eigen/Dense>

#include "spill/errors.hpp"

namespace spill {

/// Quantile level, strictly inside (0,1).
class QuantileLevel {
public:
    explicit QuantileLevel(double tau) : tau_(tau) {
        if (!(tau > 0.0 && tau < 1.0))
            throw DomainError("quantile level must lie strictly in (0,1), got " +
                              std::to_string(tau));
    }
    double value() const { return tau_; }

private:
    double tau_;
};

struct SolverOptions {
    double tol = 1e-8;  // duality-gap tolerance on standardized data
    int max_iter = 200;
};

struct QuantileFitResult {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    double objective = 0.0; // sum of check-function losses at the solution
    int iterations = 0;
    bool converged = false;
    double duality_gap = 0.0;      // gap at exit, standardized scale
    bool possibly_nonunique = false; // optimum may be a face, see fit()
};

/// Check function rho_tau(u) = u * (tau - 1{u<0}).
double quantile_loss(double u, QuantileLevel tau);

/// Minimize sum_i rho_tau(y_i - a - x_i'b) over (a, b).
///
/// Interior-point (Frisch-Newton) solve of the LP dual with Mehrotra
/// corrector steps. Regressors are centered/scaled internally and the
/// response is scaled by its standard deviation, so the gap tolerance is
/// scale-free; returned coefficients are on the original scale. When the
/// optimum is a degenerate face the interior-point limit is reported and
/// possibly_nonunique is set.
QuantileFitResult fit_quantile(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                               QuantileLevel tau, const SolverOptions& opts = {});

} // namespace spill
