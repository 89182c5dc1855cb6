#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spill/quantreg.hpp"
#include "spill/timeseries.hpp"

namespace spill {

struct QvarSpec {
    int p = 1;
    QuantileLevel tau{0.5};
};

/// Equation-by-equation QVAR(p) fit at one quantile.
struct QvarModel {
    QvarSpec spec{};
    std::vector<std::string> asset_order;
    Eigen::VectorXd alpha;            // n intercepts
    std::vector<Eigen::MatrixXd> B;   // p lag matrices, each n x n
    Eigen::MatrixXd residuals;        // (T-p) x n, empty for analytic models
    Eigen::MatrixXd sigma;            // n x n residual covariance, symmetric PSD
    bool psd_repaired = false;        // negative eigenvalues were clipped
    bool all_converged = true;        // every equation hit the gap tolerance
    std::vector<int> iterations;      // per equation

    Eigen::Index n() const { return alpha.size(); }
};

/// Fit each equation j of Y_t = alpha + sum_i B_i Y_{t-i} + eps_t by
/// quantile regression on the stacked lag design; sigma is the symmetrized
/// sample covariance of the residuals (divisor T-p-1).
QvarModel fit_qvar(const Eigen::MatrixXd& diffs, std::vector<std::string> asset_order,
                   const QvarSpec& spec, const SolverOptions& opts = {});
QvarModel fit_qvar(const DeviationPanel& panel, const QvarSpec& spec,
                   const SolverOptions& opts = {});

/// Assemble a model from known parameters (no estimation); residuals stay
/// empty. Used for analytic FEVD targets and fixtures.
QvarModel model_from_parameters(std::vector<Eigen::MatrixXd> B, Eigen::MatrixXd sigma,
                                std::vector<std::string> asset_order = {},
                                QuantileLevel tau = QuantileLevel(0.5));

/// Spectral radius of the np x np companion matrix of B_1..B_p.
/// >= 1 means the VAR recursion is not stationary.
double stability_check(const QvarModel& model);

} // namespace spill
