#include "spill/qvar.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace spill {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Stacked lag design [Y_{t-1}, ..., Y_{t-p}] for rows t = p..T-1.
MatrixXd lag_design(const MatrixXd& Y, int p) {
    const Index T = Y.rows();
    const Index n = Y.cols();
    const Index m = T - p;
    MatrixXd X(m, n * p);
    for (int i = 1; i <= p; ++i)
        X.middleCols(static_cast<Index>(i - 1) * n, n) = Y.middleRows(p - i, m);
    return X;
}

} // namespace

QvarModel fit_qvar(const MatrixXd& diffs, std::vector<std::string> asset_order,
                   const QvarSpec& spec, const SolverOptions& opts) {
    const Index T = diffs.rows();
    const Index n = diffs.cols();
    const int p = spec.p;
    if (p < 1) throw DomainError("fit_qvar: lag order must be >= 1");
    if (n < 1) throw DomainError("fit_qvar: empty panel");
    if (asset_order.size() != static_cast<std::size_t>(n))
        throw AlignmentError("fit_qvar: asset_order size must match panel width");
    if (T - p <= n * p + 1)
        throw InsufficientDataError("fit_qvar: " + std::to_string(T) + " observations with p=" +
                                    std::to_string(p) + " and n=" + std::to_string(n) +
                                    " leave too few estimation rows");
    if (!diffs.allFinite()) throw DomainError("fit_qvar: panel is not balanced (NaN present)");

    const MatrixXd X = lag_design(diffs, p);
    const Index m = T - p;

    QvarModel model;
    model.spec = spec;
    model.asset_order = std::move(asset_order);
    model.alpha.resize(n);
    model.B.assign(p, MatrixXd::Zero(n, n));
    model.residuals.resize(m, n);
    model.iterations.resize(n);

    for (Index j = 0; j < n; ++j) {
        const VectorXd yj = diffs.col(j).tail(m);
        QuantileFitResult fit;
        try {
            fit = fit_quantile(yj, X, spec.tau, opts);
        } catch (const SingularDesignError& e) {
            throw SingularDesignError("equation " + std::to_string(j) + " (" +
                                      model.asset_order[static_cast<std::size_t>(j)] +
                                      "): " + e.what());
        }
        model.alpha[j] = fit.intercept;
        for (int i = 0; i < p; ++i)
            model.B[static_cast<std::size_t>(i)].row(j) =
                fit.coefficients.segment(static_cast<Index>(i) * n, n).transpose();
        model.residuals.col(j) =
            yj - VectorXd::Constant(m, fit.intercept) - X * fit.coefficients;
        model.iterations[static_cast<std::size_t>(j)] = fit.iterations;
        model.all_converged = model.all_converged && fit.converged;
    }

    // Symmetrized sample covariance of the quantile residuals.
    const Eigen::RowVectorXd means = model.residuals.colwise().mean();
    const MatrixXd centered = model.residuals.rowwise() - means;
    MatrixXd sigma = centered.transpose() * centered / static_cast<double>(m - 1);
    sigma = ((sigma + sigma.transpose()) / 2.0).eval();

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
    const double floor = -1e-10 * sigma.trace();
    if (es.eigenvalues().minCoeff() < floor) {
        VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        sigma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        sigma = ((sigma + sigma.transpose()) / 2.0).eval();
        model.psd_repaired = true;
    }
    model.sigma = sigma;
    return model;
}

QvarModel fit_qvar(const DeviationPanel& panel, const QvarSpec& spec, const SolverOptions& opts) {
    return fit_qvar(panel.diffs, panel.asset_ids(), spec, opts);
}

QvarModel model_from_parameters(std::vector<MatrixXd> B, MatrixXd sigma,
                                std::vector<std::string> asset_order, QuantileLevel tau) {
    if (B.empty()) throw DomainError("model_from_parameters: need at least one lag matrix");
    const Index n = sigma.rows();
    if (sigma.cols() != n) throw AlignmentError("model_from_parameters: sigma must be square");
    for (const auto& Bi : B)
        if (Bi.rows() != n || Bi.cols() != n)
            throw AlignmentError("model_from_parameters: lag matrix shape mismatch");
    if (asset_order.empty()) {
        asset_order.reserve(static_cast<std::size_t>(n));
        for (Index j = 0; j < n; ++j) asset_order.push_back("A" + std::to_string(j + 1));
    }
    if (asset_order.size() != static_cast<std::size_t>(n))
        throw AlignmentError("model_from_parameters: asset_order size mismatch");

    QvarModel model;
    model.spec = QvarSpec{static_cast<int>(B.size()), tau};
    model.asset_order = std::move(asset_order);
    model.alpha = VectorXd::Zero(n);
    model.B = std::move(B);
    model.sigma = ((sigma + sigma.transpose()) / 2.0).eval();
    return model;
}

double stability_check(const QvarModel& model) {
    const Index n = model.n();
    const int p = static_cast<int>(model.B.size());
    MatrixXd companion = MatrixXd::Zero(n * p, n * p);
    for (int i = 0; i < p; ++i)
        companion.block(0, static_cast<Index>(i) * n, n, n) = model.B[static_cast<std::size_t>(i)];
    for (int i = 1; i < p; ++i)
        companion.block(static_cast<Index>(i) * n, static_cast<Index>(i - 1) * n, n, n) =
            MatrixXd::Identity(n, n);
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace spill
