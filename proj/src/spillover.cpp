#include "spill/spillover.hpp"

#include <algorithm>
#include <cmath>

namespace spill {

using Eigen::Index;

namespace {

void require_same_assets(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const char* where) {
    if (a != b) throw AlignmentError(std::string(where) + ": asset order mismatch");
}

} // namespace

SpilloverIndices spillover_indices(const FevdMatrix& fevd) {
    const Index n = fevd.n();
    const Eigen::MatrixXd& M = fevd.normalized;

    SpilloverIndices out;
    out.tau = fevd.tau;
    out.asset_order = fevd.asset_order;
    out.from.resize(n);
    out.to.resize(n);
    for (Index j = 0; j < n; ++j) {
        out.from[j] = M.row(j).sum() - M(j, j);
        out.to[j] = M.col(j).sum() - M(j, j);
    }
    out.net = out.to - out.from;
    out.total = out.from.sum() / static_cast<double>(n);
    return out;
}

RelativeSpillover relative_spillover(const SpilloverIndices& low, const SpilloverIndices& mid,
                                     const SpilloverIndices& high) {
    require_same_assets(low.asset_order, mid.asset_order, "relative_spillover");
    require_same_assets(high.asset_order, mid.asset_order, "relative_spillover");

    RelativeSpillover out;
    out.asset_order = mid.asset_order;
    out.tau_low = low.tau.value();
    out.tau_mid = mid.tau.value();
    out.tau_high = high.tau.value();
    out.left_from = low.from - mid.from;
    out.left_to = low.to - mid.to;
    out.left_net = low.net - mid.net;
    out.right_from = high.from - mid.from;
    out.right_to = high.to - mid.to;
    out.right_net = high.net - mid.net;
    out.left_total = low.total - mid.total;
    out.right_total = high.total - mid.total;
    return out;
}

std::vector<PairDelta> pairwise_deltas(const FevdMatrix& tail, const FevdMatrix& median,
                                       std::size_t top_k) {
    require_same_assets(tail.asset_order, median.asset_order, "pairwise_deltas");
    if (tail.horizon != median.horizon)
        throw AlignmentError("pairwise_deltas: horizon mismatch");

    const Index n = tail.n();
    std::vector<PairDelta> all;
    all.reserve(static_cast<std::size_t>(n * (n - 1)));
    for (Index src = 0; src < n; ++src) {
        for (Index tgt = 0; tgt < n; ++tgt) {
            if (src == tgt) continue;
            PairDelta d;
            d.source = tail.asset_order[static_cast<std::size_t>(src)];
            d.target = tail.asset_order[static_cast<std::size_t>(tgt)];
            d.delta_pp = 100.0 * (tail.normalized(tgt, src) - median.normalized(tgt, src));
            all.push_back(std::move(d));
        }
    }
    std::sort(all.begin(), all.end(), [](const PairDelta& a, const PairDelta& b) {
        if (a.delta_pp != b.delta_pp) return a.delta_pp > b.delta_pp;
        if (a.source != b.source) return a.source < b.source;
        return a.target < b.target;
    });
    if (top_k < all.size()) all.resize(top_k);
    return all;
}

std::vector<NetworkEdge> network_edges(const FevdMatrix& fevd, double threshold) {
    if (threshold < 0.0) throw DomainError("network_edges: threshold must be >= 0");
    const Index n = fevd.n();
    std::vector<NetworkEdge> edges;
    for (Index src = 0; src < n; ++src) {
        for (Index tgt = 0; tgt < n; ++tgt) {
            if (src == tgt) continue;
            const double weight = fevd.normalized(tgt, src);
            if (weight < threshold) continue;
            NetworkEdge e;
            e.source = fevd.asset_order[static_cast<std::size_t>(src)];
            e.target = fevd.asset_order[static_cast<std::size_t>(tgt)];
            e.weight = weight;
            e.net_weight = weight - fevd.normalized(src, tgt);
            edges.push_back(std::move(e));
        }
    }
    return edges;
}

std::vector<CategoryFlow> category_flows(const FevdMatrix& fevd,
                                         const std::vector<AssetMeta>& meta) {
    const Index n = fevd.n();
    if (meta.size() != static_cast<std::size_t>(n))
        throw AlignmentError("category_flows: metadata size mismatch");
    for (std::size_t j = 0; j < meta.size(); ++j)
        if (meta[j].id != fevd.asset_order[j])
            throw AlignmentError("category_flows: metadata order mismatch at '" + meta[j].id +
                                 "'");

    std::vector<AssetCategory> present;
    for (const auto& m : meta)
        if (std::find(present.begin(), present.end(), m.category) == present.end())
            present.push_back(m.category);
    std::sort(present.begin(), present.end(),
              [](AssetCategory a, AssetCategory b) { return static_cast<int>(a) < static_cast<int>(b); });

    std::vector<CategoryFlow> flows;
    for (AssetCategory cf : present) {
        for (AssetCategory ct : present) {
            CategoryFlow flow;
            flow.from = cf;
            flow.to = ct;
            flow.flow = 0.0;
            for (Index j = 0; j < n; ++j) {
                if (meta[static_cast<std::size_t>(j)].category != ct) continue;
                for (Index k = 0; k < n; ++k) {
                    if (j == k || meta[static_cast<std::size_t>(k)].category != cf) continue;
                    flow.flow += fevd.normalized(j, k);
                }
            }
            flows.push_back(flow);
        }
    }
    return flows;
}

} // namespace spill
