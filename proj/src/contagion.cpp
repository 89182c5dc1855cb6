#include "spill/contagion.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "spill/fevd.hpp"
#include "spill/spillover.hpp"

namespace spill {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kZ95OneSided = 1.6448536269514722;

double clamp_rho(double rho) { return std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12); }

struct AlignedPair {
    VectorXd x; // affected
    VectorXd y; // target
};

AlignedPair aligned_window(const DeviationPanel& panel, Index xcol, Index ycol,
                           std::int64_t start, std::int64_t end) {
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < panel.diff_timestamps.size(); ++r) {
        const std::int64_t ts = panel.diff_timestamps[r];
        if (ts < start || ts > end) continue;
        const double xv = panel.diffs(static_cast<Index>(r), xcol);
        const double yv = panel.diffs(static_cast<Index>(r), ycol);
        if (std::isfinite(xv) && std::isfinite(yv)) {
            xs.push_back(xv);
            ys.push_back(yv);
        }
    }
    AlignedPair out;
    out.x = Eigen::Map<VectorXd>(xs.data(), static_cast<Index>(xs.size()));
    out.y = Eigen::Map<VectorXd>(ys.data(), static_cast<Index>(ys.size()));
    return out;
}

double sample_variance(const VectorXd& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

double pearson(const VectorXd& x, const VectorXd& y) {
    const double mx = x.mean(), my = y.mean();
    const VectorXd xc = x.array() - mx;
    const VectorXd yc = y.array() - my;
    const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    if (!(denom > 0.0)) throw DegenerateVarianceError("pearson: constant series in window");
    return xc.dot(yc) / denom;
}

// Euclidean projection onto the probability simplex.
VectorXd project_simplex(const VectorXd& v) {
    const Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0, theta = 0.0;
    for (Index i = 0; i < n; ++i) {
        cssv += u[static_cast<std::size_t>(i)];
        const double t = (cssv - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

// min ||y - D w||^2 on the simplex; projected gradient, uniform start.
VectorXd simplex_least_squares(const MatrixXd& D, const VectorXd& y) {
    const Index k = D.cols();
    if (k == 1) return VectorXd::Ones(1);
    VectorXd w = VectorXd::Constant(k, 1.0 / static_cast<double>(k));

    const MatrixXd G = D.transpose() * D;
    const VectorXd c = D.transpose() * y;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    const double L = std::max(es.eigenvalues().maxCoeff(), 1e-30);
    const double step = 1.0 / L;

    for (int it = 0; it < 500000; ++it) {
        const VectorXd grad = G * w - c;
        const VectorXd w_next = project_simplex(w - step * grad);
        const double move = (w_next - w).cwiseAbs().maxCoeff();
        w = w_next;
        if (move <= 1e-14) break;
    }
    return w;
}

struct SynthFit {
    VectorXd weights;
    double pre_rmse = 0.0;
    double effect = 0.0;
    VectorXd treated_path, synthetic_path;
};

SynthFit fit_synth(const MatrixXd& outcome, Index treated_col,
                   const std::vector<Index>& donor_cols, std::pair<std::size_t, std::size_t> pre,
                   std::pair<std::size_t, std::size_t> event) {
    const auto pre_lo = static_cast<Index>(pre.first);
    const auto pre_len = static_cast<Index>(pre.second - pre.first + 1);
    const auto ev_lo = static_cast<Index>(event.first);
    const auto ev_len = static_cast<Index>(event.second - event.first + 1);
    const auto k = static_cast<Index>(donor_cols.size());

    MatrixXd Dpre(pre_len, k), Dev(ev_len, k);
    for (Index j = 0; j < k; ++j) {
        Dpre.col(j) = outcome.col(donor_cols[static_cast<std::size_t>(j)]).segment(pre_lo, pre_len);
        Dev.col(j) = outcome.col(donor_cols[static_cast<std::size_t>(j)]).segment(ev_lo, ev_len);
    }
    const VectorXd y_pre = outcome.col(treated_col).segment(pre_lo, pre_len);
    const VectorXd y_ev = outcome.col(treated_col).segment(ev_lo, ev_len);

    SynthFit fit;
    fit.weights = simplex_least_squares(Dpre, y_pre);
    const VectorXd synth_pre = Dpre * fit.weights;
    const VectorXd synth_ev = Dev * fit.weights;
    fit.pre_rmse = std::sqrt((y_pre - synth_pre).squaredNorm() / static_cast<double>(pre_len));
    fit.effect = (y_ev - synth_ev).mean();

    fit.treated_path.resize(pre_len + ev_len);
    fit.treated_path << y_pre, y_ev;
    fit.synthetic_path.resize(pre_len + ev_len);
    fit.synthetic_path << synth_pre, synth_ev;
    return fit;
}

} // namespace

double fr_adjust(double rho_crisis, double delta) {
    if (!(std::abs(rho_crisis) <= 1.0))
        throw DomainError("fr_adjust: correlation outside [-1,1]");
    if (!(delta > -1.0)) throw DomainError("fr_adjust: delta must exceed -1");
    return rho_crisis / std::sqrt(1.0 + delta * (1.0 - rho_crisis * rho_crisis));
}

std::vector<FrResult> fr_test(const DeviationPanel& panel, const EventWindowSpec& spec,
                              const std::vector<std::string>& targets, std::size_t min_obs) {
    const Index affected = panel.asset_index(spec.affected_asset);
    if (affected < 0)
        throw AlignmentError("fr_test: affected asset '" + spec.affected_asset +
                             "' not in panel");
    if (!(spec.calm_start < spec.calm_end) || !(spec.crisis_start < spec.crisis_end))
        throw AlignmentError("fr_test: windows must have positive length");
    if (spec.calm_end > spec.crisis_start)
        throw AlignmentError("fr_test: calm window must precede crisis window");
    const std::size_t need = std::max<std::size_t>(min_obs, 4);

    std::vector<FrResult> out;
    out.reserve(targets.size());
    for (const auto& id : targets) {
        if (id == spec.affected_asset) continue;
        const Index tcol = panel.asset_index(id);
        if (tcol < 0) throw AlignmentError("fr_test: target '" + id + "' not in panel");

        const AlignedPair calm =
            aligned_window(panel, affected, tcol, spec.calm_start, spec.calm_end);
        const AlignedPair crisis =
            aligned_window(panel, affected, tcol, spec.crisis_start, spec.crisis_end);
        if (static_cast<std::size_t>(calm.x.size()) < need)
            throw InsufficientDataError("fr_test: calm window has " +
                                        std::to_string(calm.x.size()) + " aligned rows for '" +
                                        id + "' (need " + std::to_string(need) + ")");
        if (static_cast<std::size_t>(crisis.x.size()) < need)
            throw InsufficientDataError("fr_test: crisis window has " +
                                        std::to_string(crisis.x.size()) + " aligned rows for '" +
                                        id + "' (need " + std::to_string(need) + ")");

        FrResult r;
        r.target_asset = id;
        r.n_calm = static_cast<std::size_t>(calm.x.size());
        r.n_crisis = static_cast<std::size_t>(crisis.x.size());
        r.rho_calm = pearson(calm.x, calm.y);
        r.rho_crisis = pearson(crisis.x, crisis.y);
        const double var_calm = sample_variance(calm.x);
        if (!(var_calm > 0.0))
            throw DegenerateVarianceError("fr_test: affected asset constant in calm window");
        r.delta = sample_variance(crisis.x) / var_calm - 1.0;
        r.rho_adj = fr_adjust(r.rho_crisis, r.delta);
        r.delta_rho_adj = r.rho_adj - r.rho_calm;

        const double se = std::sqrt(1.0 / static_cast<double>(r.n_crisis - 3) +
                                    1.0 / static_cast<double>(r.n_calm - 3));
        r.z_stat = (std::atanh(clamp_rho(r.rho_adj)) - std::atanh(clamp_rho(r.rho_calm))) / se;
        r.significant = r.z_stat > kZ95OneSided;
        out.push_back(std::move(r));
    }
    return out;
}

std::map<AssetCategory, double> category_contagion(const std::vector<FrResult>& results,
                                                   const std::vector<AssetMeta>& meta) {
    std::map<AssetCategory, std::pair<double, int>> acc;
    for (const auto& r : results) {
        auto it = std::find_if(meta.begin(), meta.end(),
                               [&](const AssetMeta& m) { return m.id == r.target_asset; });
        if (it == meta.end())
            throw AlignmentError("category_contagion: no metadata for '" + r.target_asset + "'");
        auto& slot = acc[it->category];
        slot.first += r.delta_rho_adj;
        slot.second += 1;
    }
    std::map<AssetCategory, double> out;
    for (const auto& [cat, sc] : acc) out[cat] = sc.first / sc.second;
    return out;
}

SyntheticControlResult synth_control(const MatrixXd& outcome,
                                     const std::vector<std::string>& asset_order,
                                     const std::string& treated,
                                     const std::vector<std::string>& donors,
                                     std::pair<std::size_t, std::size_t> pre_window,
                                     std::pair<std::size_t, std::size_t> event_window) {
    if (donors.size() < 2)
        throw DonorPoolError("synth_control: need at least 2 donors, got " +
                             std::to_string(donors.size()));
    if (pre_window.second < pre_window.first || event_window.second < event_window.first)
        throw AlignmentError("synth_control: malformed windows");
    const std::size_t pre_len = pre_window.second - pre_window.first + 1;
    if (pre_len < donors.size())
        throw InsufficientDataError("synth_control: pre-window length " +
                                    std::to_string(pre_len) + " below donor count " +
                                    std::to_string(donors.size()));
    if (event_window.second >= static_cast<std::size_t>(outcome.rows()))
        throw AlignmentError("synth_control: event window beyond outcome length");

    auto col_of = [&](const std::string& id) {
        for (std::size_t j = 0; j < asset_order.size(); ++j)
            if (asset_order[j] == id) return static_cast<Index>(j);
        throw AlignmentError("synth_control: asset '" + id + "' not in outcome");
    };
    const Index treated_col = col_of(treated);
    std::vector<Index> donor_cols;
    donor_cols.reserve(donors.size());
    for (const auto& d : donors) donor_cols.push_back(col_of(d));

    SyntheticControlResult res;
    res.treated = treated;
    res.donors = donors;
    const SynthFit fit = fit_synth(outcome, treated_col, donor_cols, pre_window, event_window);
    res.weights = fit.weights;
    res.pre_rmse = fit.pre_rmse;
    res.effect = fit.effect;
    res.treated_path = fit.treated_path;
    res.synthetic_path = fit.synthetic_path;

    // Placebos: reassign treatment to each donor, pool = remaining donors
    // (the original treated unit stays excluded).
    res.placebo_effects.reserve(donors.size());
    for (std::size_t d = 0; d < donors.size(); ++d) {
        std::vector<Index> pool;
        for (std::size_t j = 0; j < donor_cols.size(); ++j)
            if (j != d) pool.push_back(donor_cols[j]);
        const SynthFit placebo =
            fit_synth(outcome, donor_cols[d], pool, pre_window, event_window);
        res.placebo_effects.push_back(placebo.effect);
    }

    std::size_t rank = 1;
    for (double pe : res.placebo_effects)
        if (std::abs(pe) >= std::abs(res.effect)) ++rank;
    res.p_value = static_cast<double>(rank) / static_cast<double>(donors.size() + 1);
    return res;
}

MatrixXd spillover_proxy(const DeviationPanel& panel, int window) {
    if (window < 1) throw DomainError("spillover_proxy: window must be >= 1");
    const Index T = panel.n_obs();
    const Index n = panel.n_assets();
    const MatrixXd abs_diffs = panel.diffs.cwiseAbs();
    MatrixXd proxy(T, n);
    for (Index t = 0; t < T; ++t) {
        const Index lo = std::max<Index>(0, t - window + 1);
        proxy.row(t) = abs_diffs.middleRows(lo, t - lo + 1).colwise().mean();
    }
    return proxy;
}

EventSpilloverDelta event_spillover_delta(const DeviationPanel& panel,
                                          const EventWindowSpec& spec, int p, int horizon,
                                          const SolverOptions& opts) {
    const std::vector<std::string> ids = panel.asset_ids();
    const QvarSpec qspec{p, QuantileLevel(0.5)};
    auto total_on = [&](std::int64_t start, std::int64_t end) {
        const DeviationPanel win = balanced_window(panel, ids, start, end);
        const QvarModel model = fit_qvar(win, qspec, opts);
        return spillover_indices(generalized_fevd(model, horizon)).total * 100.0;
    };
    EventSpilloverDelta out;
    out.pre_total_pct = total_on(spec.calm_start, spec.calm_end);
    out.during_total_pct = total_on(spec.crisis_start, spec.crisis_end);
    out.delta_pp = out.during_total_pct - out.pre_total_pct;
    return out;
}

} // namespace spill
