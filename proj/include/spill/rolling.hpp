#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spill/spillover.hpp"

namespace spill {

/// Fixed-length windows [i*s, i*s + w - 1] over the diff series.
struct WindowPlan {
    std::size_t w = 0;
    std::size_t s = 0;
    std::vector<std::pair<std::size_t, std::size_t>> windows; // inclusive index pairs
};

WindowPlan plan_windows(std::size_t n_obs, std::size_t w, std::size_t s);

/// One window x quantile estimation outcome. A failed cell keeps its error
/// string and no indices; the run continues.
struct RollingCell {
    std::optional<SpilloverIndices> indices;
    bool unstable = false;      // companion spectral radius >= 1
    bool psd_repaired = false;  // sigma needed eigenvalue clipping
    bool nonconverged = false;  // some equation hit the iteration cap
    std::string error;          // nonempty iff the cell failed

    bool ok() const { return indices.has_value(); }
    std::string flags() const;
};

struct RollingResult {
    WindowPlan plan;
    std::vector<double> taus;
    int p = 1;
    int horizon = 10;
    std::vector<std::int64_t> anchors;           // last diff timestamp per window
    std::vector<std::vector<RollingCell>> cells; // [window][tau]
};

/// Windowed fit_qvar -> generalized_fevd -> indices at every requested
/// quantile. Windows are independent work units evaluated on up to
/// `threads` workers (<=0 means hardware concurrency); results land in
/// plan order regardless of scheduling. Throws RunError only if every
/// cell failed.
RollingResult rolling_run(const DeviationPanel& panel, const WindowPlan& plan,
                          const std::vector<QvarSpec>& specs, int horizon,
                          int threads = 1, const SolverOptions& opts = {});

} // namespace spill
