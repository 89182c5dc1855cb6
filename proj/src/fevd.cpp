#include "spill/fevd.hpp"

#include <cmath>

namespace spill {

using Eigen::Index;
using Eigen::MatrixXd;

QvmaCoefficients qvma(const QvarModel& model, int horizon) {
    if (horizon < 1) throw DomainError("qvma: horizon must be >= 1");
    const Index n = model.n();
    const int p = static_cast<int>(model.B.size());

    QvmaCoefficients out;
    out.horizon = horizon;
    out.A.reserve(static_cast<std::size_t>(horizon));
    out.A.push_back(MatrixXd::Identity(n, n));
    for (int j = 1; j < horizon; ++j) {
        MatrixXd Aj = MatrixXd::Zero(n, n);
        for (int i = 1; i <= std::min(j, p); ++i)
            Aj += model.B[static_cast<std::size_t>(i - 1)] * out.A[static_cast<std::size_t>(j - i)];
        out.A.push_back(std::move(Aj));
    }
    return out;
}

FevdMatrix generalized_fevd(const QvarModel& model, int horizon) {
    const Index n = model.n();
    const MatrixXd& sigma = model.sigma;
    for (Index k = 0; k < n; ++k)
        if (!(sigma(k, k) > 0.0))
            throw DegenerateVarianceError("generalized_fevd: zero residual variance for asset '" +
                                          model.asset_order[static_cast<std::size_t>(k)] + "'");

    const QvmaCoefficients ma = qvma(model, horizon);

    MatrixXd num = MatrixXd::Zero(n, n); // accumulated squared responses
    Eigen::VectorXd den = Eigen::VectorXd::Zero(n);
    for (int h = 0; h < horizon; ++h) {
        const MatrixXd AS = ma.A[static_cast<std::size_t>(h)] * sigma; // (A_h Sigma)
        num += AS.cwiseAbs2();
        den += (AS * ma.A[static_cast<std::size_t>(h)].transpose()).diagonal();
    }

    FevdMatrix out;
    out.tau = model.spec.tau;
    out.horizon = horizon;
    out.asset_order = model.asset_order;
    out.raw.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        if (!(den[j] > 0.0))
            throw DegenerateVarianceError("generalized_fevd: zero forecast-error variance for '" +
                                          model.asset_order[static_cast<std::size_t>(j)] + "'");
        for (Index k = 0; k < n; ++k) out.raw(j, k) = num(j, k) / sigma(k, k) / den[j];
    }

    out.normalized.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        const double row_sum = out.raw.row(j).sum();
        if (!(row_sum > 0.0))
            throw DegenerateVarianceError("generalized_fevd: zero row sum for '" +
                                          model.asset_order[static_cast<std::size_t>(j)] + "'");
        out.normalized.row(j) = out.raw.row(j) / row_sum;
    }
    return out;
}

} // namespace spill
