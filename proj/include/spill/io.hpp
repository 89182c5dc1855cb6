#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spill/contagion.hpp"
#include "spill/dgp.hpp"
#include "spill/rolling.hpp"
#include "spill/spillover.hpp"

namespace spill {

/// Resolved run configuration. Loaded from a JSON file, overridable by
/// command-line flags; the resolved form is embedded in every artifact.
struct RunConfig {
    std::string input;              // panel CSV
    std::string asset_meta;         // category sidecar JSON, optional
    std::vector<std::string> subset; // asset ids, empty = all
    std::vector<double> quantiles = {0.05, 0.5, 0.95};
    int lags = 1;
    int horizon = 10;
    std::optional<std::size_t> window; // rolling
    std::optional<std::size_t> step;
    std::string event_spec;         // event JSON path, optional
    std::string out_dir = ".";
    bool emit_csv = true;
    bool emit_json = true;
    bool stamp = false;             // prepend a generated-at header line
    int threads = 0;                // 0 = hardware concurrency
    double edge_threshold = 0.01;
    std::optional<std::int64_t> start; // panel restriction, epoch seconds
    std::optional<std::int64_t> end;
};

RunConfig load_run_config(const std::string& path);
void validate_config(const RunConfig& cfg);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Event study configuration (window spec + optional donor list, proxy
/// settings and resampling).
struct EventConfig {
    EventWindowSpec window;
    std::vector<std::string> donors; // empty = all non-affected assets
    int proxy_window = 24;
    std::optional<std::int64_t> resample_seconds;
};

EventConfig load_event_config(const std::string& path);

DgpSpec dgp_spec_from_json(const nlohmann::json& j);
DgpSpec load_dgp_spec(const std::string& path);

// ---- artifact writers ------------------------------------------------
// All writers are deterministic for fixed inputs; the optional stamp line
// is the only time-dependent output and is off by default.

void write_text_file(const std::string& path, const std::string& content);

std::string fevd_to_json(const FevdMatrix& fevd, const nlohmann::json& config);
std::string indices_to_json(const SpilloverIndices& idx, const nlohmann::json& config);
std::string indices_to_csv(const SpilloverIndices& idx, const std::string& header);
std::string relative_to_json(const RelativeSpillover& rel, const nlohmann::json& config);
std::string relative_to_csv(const RelativeSpillover& rel, const std::string& header);
std::string edges_to_json(const std::vector<NetworkEdge>& edges, const nlohmann::json& config);
std::string flows_to_json(const std::vector<CategoryFlow>& flows, const nlohmann::json& config);
std::string pair_deltas_to_csv(const std::vector<PairDelta>& deltas, const std::string& header);
std::string rolling_to_csv(const RollingResult& r, const std::vector<std::string>& assets,
                           const std::string& header);
std::string rolling_to_plot_json(const RollingResult& r, const std::vector<std::string>& assets,
                                 const nlohmann::json& config);
std::string fr_results_to_csv(const std::vector<FrResult>& results, const std::string& header);
std::string category_means_to_csv(const std::map<AssetCategory, double>& means,
                                  const std::string& header);
std::string synth_to_json(const SyntheticControlResult& res,
                          const std::vector<std::int64_t>& path_timestamps,
                          const nlohmann::json& config);
std::string panel_to_csv(const DeviationPanel& panel, const std::string& header);

/// Full-precision decimal rendering that round-trips doubles.
std::string format_double(double v);
/// Table rendering, one decimal place (percent values).
std::string format_pct(double v);

} // namespace spill
