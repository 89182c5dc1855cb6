#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spill/qvar.hpp"
#include "spill/timeseries.hpp"

namespace spill {

/// Calm/crisis windows around a depeg event, instants inclusive.
struct EventWindowSpec {
    std::string name;
    std::string affected_asset;
    std::int64_t event_time = 0;
    std::int64_t calm_start = 0, calm_end = 0;
    std::int64_t crisis_start = 0, crisis_end = 0;
};

/// Forbes-Rigobon adjusted-correlation outcome for one target asset.
struct FrResult {
    std::string target_asset;
    double rho_calm = 0.0;
    double rho_crisis = 0.0;
    double delta = 0.0;   // crisis/calm variance ratio of the affected asset, minus 1
    double rho_adj = 0.0; // rho_crisis / sqrt(1 + delta (1 - rho_crisis^2))
    double delta_rho_adj = 0.0; // rho_adj - rho_calm
    double z_stat = 0.0;  // one-sided Fisher z for rho_adj > rho_calm
    bool significant = false; // at 5%
    std::size_t n_calm = 0, n_crisis = 0;
};

/// Volatility-corrected crisis correlation. delta must exceed -1.
double fr_adjust(double rho_crisis, double delta);

/// Correlations between the affected asset's diffs and each target's over
/// the calm and crisis windows, with delta taken from the affected series
/// on the same pairwise-aligned rows. Each window must keep at least
/// min_obs aligned finite pairs.
std::vector<FrResult> fr_test(const DeviationPanel& panel, const EventWindowSpec& spec,
                              const std::vector<std::string>& targets,
                              std::size_t min_obs = 10);

/// Mean delta_rho_adj by target category; empty categories omitted.
std::map<AssetCategory, double> category_contagion(const std::vector<FrResult>& results,
                                                   const std::vector<AssetMeta>& meta);

/// Synthetic-control fit with placebo rank inference.
struct SyntheticControlResult {
    std::string treated;
    std::vector<std::string> donors;
    Eigen::VectorXd weights;            // simplex: >= 0, sums to 1
    double pre_rmse = 0.0;
    double effect = 0.0;                // mean treated-minus-synthetic gap, event window
    std::vector<double> placebo_effects; // one per donor (donor treated, original excluded)
    double p_value = 0.0;               // rank of |effect| among all, / (donors+1)
    Eigen::VectorXd treated_path;       // pre then event rows
    Eigen::VectorXd synthetic_path;
};

/// Weights solve min ||treated_pre - D w||_2 on the simplex (projected
/// gradient with exact simplex projection, uniform start). Windows are
/// inclusive row ranges into `outcome`.
SyntheticControlResult synth_control(const Eigen::MatrixXd& outcome,
                                     const std::vector<std::string>& asset_order,
                                     const std::string& treated,
                                     const std::vector<std::string>& donors,
                                     std::pair<std::size_t, std::size_t> pre_window,
                                     std::pair<std::size_t, std::size_t> event_window);

/// Default synthetic-control outcome: trailing `window`-observation mean of
/// |diff| per asset (expanding at the series head), aligned with diff rows.
Eigen::MatrixXd spillover_proxy(const DeviationPanel& panel, int window = 24);

/// Median-QVAR total spillover on the calm and crisis windows, in percent,
/// plus the change in percentage points.
struct EventSpilloverDelta {
    double pre_total_pct = 0.0;
    double during_total_pct = 0.0;
    double delta_pp = 0.0;
};

EventSpilloverDelta event_spillover_delta(const DeviationPanel& panel,
                                          const EventWindowSpec& spec, int p, int horizon,
                                          const SolverOptions& opts = {});

} // namespace spill
