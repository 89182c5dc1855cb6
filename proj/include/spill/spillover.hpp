#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spill/fevd.hpp"
#include "spill/timeseries.hpp"

namespace spill {

/// Directional spillover indices on [0,1] scale; reporting multiplies by
/// 100 at the emission layer only.
struct SpilloverIndices {
    QuantileLevel tau{0.5};
    std::vector<std::string> asset_order;
    Eigen::VectorXd from; // off-diagonal row sums (received)
    Eigen::VectorXd to;   // off-diagonal column sums (transmitted)
    Eigen::VectorXd net;  // to - from
    double total = 0.0;   // off-diagonal mass / n
};

/// Tail-minus-median differences of the directional indices.
struct RelativeSpillover {
    std::vector<std::string> asset_order;
    double tau_low = 0.0, tau_mid = 0.0, tau_high = 0.0;
    Eigen::VectorXd left_from, left_to, left_net;    // value(tau_low) - value(tau_mid)
    Eigen::VectorXd right_from, right_to, right_net; // value(tau_high) - value(tau_mid)
    double left_total = 0.0, right_total = 0.0;
};

struct NetworkEdge {
    std::string source;
    std::string target;
    double weight = 0.0;     // contribution of source to target's variance
    double net_weight = 0.0; // weight minus the reverse direction
};

struct CategoryFlow {
    AssetCategory from = AssetCategory::FiatBacked;
    AssetCategory to = AssetCategory::FiatBacked;
    double flow = 0.0;
};

/// Pairwise tail-minus-median change, in percentage points.
struct PairDelta {
    std::string source;
    std::string target;
    double delta_pp = 0.0;
};

SpilloverIndices spillover_indices(const FevdMatrix& fevd);

RelativeSpillover relative_spillover(const SpilloverIndices& low,
                                     const SpilloverIndices& mid,
                                     const SpilloverIndices& high);

/// Ranked source->target changes between a tail and the median FEVD,
/// descending by delta; ties broken lexicographically by (source, target).
/// top_k clamps to n(n-1).
std::vector<PairDelta> pairwise_deltas(const FevdMatrix& tail, const FevdMatrix& median,
                                       std::size_t top_k);

/// Directed edges with weight >= threshold, ordered by (source, target)
/// panel position.
std::vector<NetworkEdge> network_edges(const FevdMatrix& fevd, double threshold = 0.01);

/// Off-diagonal FEVD mass grouped by (source category -> target category),
/// same-category pairs included. Covers every ordered pair of categories
/// present in the panel.
std::vector<CategoryFlow> category_flows(const FevdMatrix& fevd,
                                         const std::vector<AssetMeta>& meta);

} // namespace spill
