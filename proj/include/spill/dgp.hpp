#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "spill/fevd.hpp"
#include "spill/timeseries.hpp"

namespace spill {

/// Synthetic VAR data generator with known parameters; the correctness
/// oracle for the estimation pipeline.
struct RegimeSwitch {
    std::size_t switch_time = 0; // first observation index under the new regime
    std::vector<Eigen::MatrixXd> B;
    Eigen::MatrixXd sigma;
};

struct DgpSpec {
    int n = 2;
    int p = 1;
    std::vector<Eigen::MatrixXd> B;
    Eigen::MatrixXd sigma;
    enum class Dist { Gaussian, StudentT } dist = Dist::Gaussian;
    double df = 0.0; // StudentT only, > 2
    std::size_t T = 1000;
    std::uint64_t seed = 1;
    std::optional<RegimeSwitch> regime_switch;
};

/// Validate stability (companion radius < 1 per regime), PSD sigma and df.
void validate_spec(const DgpSpec& spec);

/// VAR recursion with correlated innovations (Cholesky of sigma applied to
/// iid draws); StudentT uses one chi-square mixing draw per period shared
/// across assets, rescaled to keep cov = sigma, which induces tail
/// co-movement without linear correlation. 200 burn-in observations are
/// discarded. Deterministic per seed.
DeviationPanel simulate(const DgpSpec& spec);

/// Population target: the decomposition evaluated on the true B and sigma
/// (no estimation). Single-regime specs only.
FevdMatrix theoretical_fevd(const DgpSpec& spec, int horizon);

} // namespace spill
