#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spill/errors.hpp"

namespace spill {

enum class AssetCategory {
    FiatBacked,
    CryptoCollateralized,
    Algorithmic,
    CryptoAnchor,
    FiatAnchor,
};

std::string to_string(AssetCategory category);
AssetCategory category_from_string(const std::string& name);

/// Anchor assets (BTC, dollar index) carry no $1 peg; they enter the
/// panel as scaled log levels instead of peg deviations.
inline bool is_anchor(AssetCategory c) {
    return c == AssetCategory::CryptoAnchor || c == AssetCategory::FiatAnchor;
}

struct AssetMeta {
    std::string id;
    AssetCategory category = AssetCategory::FiatBacked;
};

/// Timestamp-aligned multi-asset price panel. NaN marks missing values.
struct PricePanel {
    std::vector<AssetMeta> assets;
    std::vector<std::int64_t> timestamps; // epoch seconds, strictly increasing
    Eigen::MatrixXd values;               // T x n prices in USD

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Peg deviations (basis points) and their first differences.
///
/// Fresh panels from to_deviations() carry T deviation rows and T-1 diff
/// rows; diff row t spans dev_timestamps[t] -> dev_timestamps[t+1] and is
/// labelled by the later instant. balanced_window() filters diff rows, so
/// balanced panels hold one deviation row per kept diff row (same labels)
/// and estimation treats the kept diff rows as consecutive observations.
struct DeviationPanel {
    std::vector<AssetMeta> assets;
    std::vector<std::int64_t> dev_timestamps;
    Eigen::MatrixXd deviations; // basis points
    std::vector<std::int64_t> diff_timestamps;
    Eigen::MatrixXd diffs;      // basis points per step
    std::size_t dropped_rows = 0;

    Eigen::Index n_assets() const { return diffs.cols(); }
    Eigen::Index n_obs() const { return diffs.rows(); }
    std::vector<std::string> asset_ids() const;
    Eigen::Index asset_index(const std::string& id) const; // -1 if absent
};

/// Column selection and metadata for CSV ingestion. Empty asset_ids means
/// "all non-date columns in file order". Assets missing from categories
/// default to FiatBacked.
struct PanelSchema {
    std::vector<std::string> asset_ids;
    std::map<std::string, AssetCategory> categories;
};

/// First column `date` (ISO-8601 or epoch seconds), one column per asset,
/// empty cell = missing. Lines starting with '#' are skipped.
PricePanel load_csv(const std::string& path, const PanelSchema& schema = {});

/// Sidecar JSON: { "USDC": {"category": "fiat_backed"}, ... }
std::map<std::string, AssetCategory> load_asset_meta(const std::string& path);

/// Peg deviations: (price - 1) * 10000 bp for pegged assets,
/// log(price) * 10000 for anchor categories. NaN propagates; a NaN at
/// either endpoint makes the spanned diff NaN.
DeviationPanel to_deviations(const PricePanel& panel);

/// Restrict to diff rows labelled inside [start, end] where every selected
/// asset has a finite diff (listwise deletion). Keeps assets in subset
/// order and reports dropped in-range rows via dropped_rows.
DeviationPanel balanced_window(const DeviationPanel& panel,
                               const std::vector<std::string>& asset_subset,
                               std::int64_t start, std::int64_t end,
                               std::size_t min_rows = 1);

/// Bucket a price panel to a coarser grid: each bucket keeps its last
/// observation per asset (used to aggregate minute event data to hours).
PricePanel resample_last(const PricePanel& panel, std::int64_t bucket_seconds);

/// "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM:SS[Z]" or raw epoch seconds.
std::int64_t parse_instant(const std::string& text);
std::string format_instant(std::int64_t epoch_seconds);

} // namespace spill
