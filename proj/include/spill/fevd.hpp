#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spill/qvar.hpp"

namespace spill {

/// Moving-average coefficients A_0..A_{H-1} of a QVAR, A_0 = I.
struct QvmaCoefficients {
    std::vector<Eigen::MatrixXd> A;
    int horizon = 0;
};

/// Generalized forecast-error variance decomposition at horizon H.
/// raw rows need not sum to one; normalized rows do.
struct FevdMatrix {
    QuantileLevel tau{0.5};
    int horizon = 0;
    std::vector<std::string> asset_order;
    Eigen::MatrixXd raw;
    Eigen::MatrixXd normalized;

    Eigen::Index n() const { return normalized.rows(); }
};

/// A_j = sum_{i=1..min(j,p)} B_i A_{j-i}, A_0 = I.
QvmaCoefficients qvma(const QvarModel& model, int horizon);

/// raw[j][k] = [sum_h (e_j' A_h S e_k)^2 / s_kk] / [sum_h e_j' A_h S A_h' e_j],
/// then each row divided by its sum. Ordering-free (no Cholesky).
FevdMatrix generalized_fevd(const QvarModel& model, int horizon);

} // namespace spill
