#include "spill/rolling.hpp"

#include <atomic>
#include <thread>

#include "spill/fevd.hpp"

namespace spill {

WindowPlan plan_windows(std::size_t n_obs, std::size_t w, std::size_t s) {
    if (w < 1) throw PlanError("plan_windows: window length must be >= 1");
    if (s < 1) throw PlanError("plan_windows: step must be >= 1");
    if (w > n_obs)
        throw PlanError("plan_windows: window length " + std::to_string(w) +
                        " exceeds sample length " + std::to_string(n_obs));
    WindowPlan plan;
    plan.w = w;
    plan.s = s;
    const std::size_t count = (n_obs - w) / s + 1;
    plan.windows.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        plan.windows.emplace_back(i * s, i * s + w - 1);
    return plan;
}

std::string RollingCell::flags() const {
    std::string out;
    auto add = [&out](const char* tag) {
        if (!out.empty()) out += ';';
        out += tag;
    };
    if (unstable) add("unstable");
    if (psd_repaired) add("psd_repair");
    if (nonconverged) add("nonconvergence");
    if (!error.empty()) add(("error:" + error).c_str());
    return out;
}

namespace {

RollingCell evaluate_cell(const Eigen::MatrixXd& window_diffs,
                          const std::vector<std::string>& ids, const QvarSpec& spec, int horizon,
                          const SolverOptions& opts) {
    RollingCell cell;
    try {
        const QvarModel model = fit_qvar(window_diffs, ids, spec, opts);
        cell.psd_repaired = model.psd_repaired;
        cell.nonconverged = !model.all_converged;
        cell.unstable = stability_check(model) >= 1.0;
        cell.indices = spillover_indices(generalized_fevd(model, horizon));
    } catch (const Error& e) {
        cell.error = e.what();
    }
    return cell;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

RollingResult rolling_run(const DeviationPanel& panel, const WindowPlan& plan,
                          const std::vector<QvarSpec>& specs, int horizon, int threads,
                          const SolverOptions& opts) {
    if (specs.empty()) throw PlanError("rolling_run: no quantiles requested");
    const std::size_t n_obs = static_cast<std::size_t>(panel.n_obs());
    for (const auto& [lo, hi] : plan.windows)
        if (hi >= n_obs) throw PlanError("rolling_run: plan exceeds panel length");

    RollingResult result;
    result.plan = plan;
    result.p = specs.front().p;
    result.horizon = horizon;
    for (const auto& s : specs) result.taus.push_back(s.tau.value());
    const std::size_t n_windows = plan.windows.size();
    result.anchors.resize(n_windows);
    result.cells.assign(n_windows, std::vector<RollingCell>(specs.size()));

    const std::vector<std::string> ids = panel.asset_ids();
    // Windows are pure, independent units writing to disjoint slots, so the
    // outcome is schedule-invariant.
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_windows) return;
            const auto [lo, hi] = plan.windows[i];
            result.anchors[i] = panel.diff_timestamps[hi];
            const Eigen::MatrixXd window_diffs =
                panel.diffs.middleRows(static_cast<Eigen::Index>(lo),
                                       static_cast<Eigen::Index>(hi - lo + 1));
            for (std::size_t q = 0; q < specs.size(); ++q)
                result.cells[i][q] = evaluate_cell(window_diffs, ids, specs[q], horizon, opts);
        }
    };

    const int n_threads = std::min<int>(resolve_threads(threads), static_cast<int>(n_windows));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    bool any_ok = false;
    for (const auto& row : result.cells)
        for (const auto& cell : row) any_ok = any_ok || cell.ok();
    if (!any_ok) throw RunError("rolling_run: every window failed");
    return result;
}

} // namespace spill
