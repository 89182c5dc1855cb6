#include "spill/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace spill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string normalize_key(const std::string& s) {
    std::string out;
    for (char c : s)
        if (c != '_' && c != '-' && c != ' ')
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

std::string to_string(AssetCategory category) {
    switch (category) {
    case AssetCategory::FiatBacked: return "fiat_backed";
    case AssetCategory::CryptoCollateralized: return "crypto_collateralized";
    case AssetCategory::Algorithmic: return "algorithmic";
    case AssetCategory::CryptoAnchor: return "crypto_anchor";
    case AssetCategory::FiatAnchor: return "fiat_anchor";
    }
    return "fiat_backed";
}

AssetCategory category_from_string(const std::string& name) {
    const std::string key = normalize_key(name);
    if (key == "fiatbacked") return AssetCategory::FiatBacked;
    if (key == "cryptocollateralized") return AssetCategory::CryptoCollateralized;
    if (key == "algorithmic") return AssetCategory::Algorithmic;
    if (key == "cryptoanchor") return AssetCategory::CryptoAnchor;
    if (key == "fiatanchor") return AssetCategory::FiatAnchor;
    throw IngestError("unknown asset category: '" + name + "'");
}

std::vector<std::string> DeviationPanel::asset_ids() const {
    std::vector<std::string> ids;
    ids.reserve(assets.size());
    for (const auto& a : assets) ids.push_back(a.id);
    return ids;
}

Eigen::Index DeviationPanel::asset_index(const std::string& id) const {
    for (std::size_t j = 0; j < assets.size(); ++j)
        if (assets[j].id == id) return static_cast<Eigen::Index>(j);
    return -1;
}

std::int64_t parse_instant(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) throw IngestError("empty timestamp");

    // Plain integer = epoch seconds.
    bool all_digits = (s[0] == '-' && s.size() > 1) || std::isdigit(static_cast<unsigned char>(s[0]));
    for (std::size_t i = 1; all_digits && i < s.size(); ++i)
        all_digits = std::isdigit(static_cast<unsigned char>(s[i]));
    if (all_digits && s.find('-', 1) == std::string::npos) {
        try {
            return std::stoll(s);
        } catch (const std::exception&) {
            throw IngestError("unparseable timestamp: '" + text + "'");
        }
    }

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char sep = 0;
    int matched = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se);
    if (matched != 3 && matched != 7)
        throw IngestError("unparseable timestamp: '" + text + "'");
    if (matched == 7 && sep != 'T' && sep != ' ')
        throw IngestError("unparseable timestamp: '" + text + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60)
        throw IngestError("timestamp out of range: '" + text + "'");
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_instant(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    if (rem == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                      static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                      static_cast<int>(rem % 60));
    }
    return buf;
}

PricePanel load_csv(const std::string& path, const PanelSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.size() < 2)
        throw IngestError(path + ": header must name a date column and at least one asset");

    // Column selection: schema order wins, otherwise file order.
    std::vector<std::string> wanted = schema.asset_ids;
    if (wanted.empty()) wanted.assign(header.begin() + 1, header.end());
    std::vector<Eigen::Index> col_of(wanted.size(), -1);
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        for (std::size_t c = 1; c < header.size(); ++c)
            if (header[c] == wanted[k]) col_of[k] = static_cast<Eigen::Index>(c);
        if (col_of[k] < 0)
            throw IngestError(path + ": column '" + wanted[k] + "' not found");
    }
    if (wanted.empty()) throw IngestError(path + ": zero assets selected");

    std::vector<std::int64_t> timestamps;
    std::vector<double> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IngestError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        std::int64_t ts;
        try {
            ts = parse_instant(fields[0]);
        } catch (const IngestError& e) {
            throw IngestError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!timestamps.empty() && ts == timestamps.back())
            throw IngestError(path + ":" + std::to_string(line_no) + ": duplicate timestamp '" +
                              fields[0] + "'");
        if (!timestamps.empty() && ts < timestamps.back())
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": timestamps not increasing at '" + fields[0] + "'");
        timestamps.push_back(ts);
        for (std::size_t k = 0; k < wanted.size(); ++k) {
            const std::string& cell = fields[static_cast<std::size_t>(col_of[k])];
            if (cell.empty()) {
                cells.push_back(kNaN);
                continue;
            }
            try {
                std::size_t pos = 0;
                double v = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
                cells.push_back(v);
            } catch (const std::exception&) {
                throw IngestError(path + ":" + std::to_string(line_no) + ": bad numeric cell '" +
                                  cell + "' in column '" + wanted[k] + "'");
            }
        }
    }
    if (timestamps.empty()) throw IngestError(path + ": empty panel (no data rows)");

    PricePanel panel;
    panel.timestamps = std::move(timestamps);
    panel.assets.reserve(wanted.size());
    for (const auto& id : wanted) {
        AssetMeta meta{id, AssetCategory::FiatBacked};
        auto it = schema.categories.find(id);
        if (it != schema.categories.end()) meta.category = it->second;
        panel.assets.push_back(std::move(meta));
    }
    const auto T = static_cast<Eigen::Index>(panel.timestamps.size());
    const auto n = static_cast<Eigen::Index>(wanted.size());
    panel.values.resize(T, n);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index j = 0; j < n; ++j)
            panel.values(t, j) = cells[static_cast<std::size_t>(t * n + j)];
    return panel;
}

std::map<std::string, AssetCategory> load_asset_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw IngestError(path + ": expected an object keyed by asset id");
    std::map<std::string, AssetCategory> out;
    for (const auto& [id, val] : j.items()) {
        if (val.is_string()) {
            out[id] = category_from_string(val.get<std::string>());
        } else if (val.is_object() && val.contains("category")) {
            out[id] = category_from_string(val.at("category").get<std::string>());
        } else {
            throw IngestError(path + ": entry '" + id + "' must be a category string or {category}");
        }
    }
    return out;
}

DeviationPanel to_deviations(const PricePanel& panel) {
    if (panel.rows() == 0 || panel.cols() == 0)
        throw IngestError("cannot transform an empty panel");

    const Eigen::Index T = panel.rows();
    const Eigen::Index n = panel.cols();
    DeviationPanel out;
    out.assets = panel.assets;
    out.dev_timestamps = panel.timestamps;
    out.deviations.resize(T, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool anchor = is_anchor(panel.assets[static_cast<std::size_t>(j)].category);
        for (Eigen::Index t = 0; t < T; ++t) {
            const double p = panel.values(t, j);
            if (!std::isfinite(p)) {
                out.deviations(t, j) = kNaN;
            } else if (anchor) {
                out.deviations(t, j) = std::log(p) * 10000.0; // diffs become log returns in bp
            } else {
                out.deviations(t, j) = (p - 1.0) * 10000.0;
            }
        }
    }
    if (T > 1) {
        out.diffs = out.deviations.bottomRows(T - 1) - out.deviations.topRows(T - 1);
        out.diff_timestamps.assign(panel.timestamps.begin() + 1, panel.timestamps.end());
    } else {
        out.diffs.resize(0, n);
    }
    return out;
}

DeviationPanel balanced_window(const DeviationPanel& panel,
                               const std::vector<std::string>& asset_subset,
                               std::int64_t start, std::int64_t end, std::size_t min_rows) {
    if (asset_subset.empty()) throw AlignmentError("balanced_window: empty asset subset");
    if (!(start < end)) throw AlignmentError("balanced_window: start must precede end");

    std::vector<Eigen::Index> cols;
    cols.reserve(asset_subset.size());
    for (const auto& id : asset_subset) {
        const Eigen::Index j = panel.asset_index(id);
        if (j < 0) throw AlignmentError("balanced_window: asset '" + id + "' not in panel");
        cols.push_back(j);
    }

    std::vector<Eigen::Index> keep;
    std::size_t dropped = 0;
    for (std::size_t r = 0; r < panel.diff_timestamps.size(); ++r) {
        const std::int64_t ts = panel.diff_timestamps[r];
        if (ts < start || ts > end) continue;
        bool finite = true;
        for (Eigen::Index j : cols)
            finite = finite && std::isfinite(panel.diffs(static_cast<Eigen::Index>(r), j));
        if (finite)
            keep.push_back(static_cast<Eigen::Index>(r));
        else
            ++dropped;
    }
    if (keep.size() < std::max<std::size_t>(min_rows, 1))
        throw InsufficientDataError("balanced_window: only " + std::to_string(keep.size()) +
                                    " balanced rows in range (need >= " +
                                    std::to_string(std::max<std::size_t>(min_rows, 1)) + ")");

    DeviationPanel out;
    out.assets.reserve(cols.size());
    for (Eigen::Index j : cols) out.assets.push_back(panel.assets[static_cast<std::size_t>(j)]);
    out.dropped_rows = dropped;

    const auto R = static_cast<Eigen::Index>(keep.size());
    const auto m = static_cast<Eigen::Index>(cols.size());
    out.diffs.resize(R, m);
    out.deviations.resize(R, m);
    out.diff_timestamps.reserve(keep.size());
    out.dev_timestamps.reserve(keep.size());
    // Deviations are looked up at the diff label (the later endpoint). A
    // fresh panel has diff row r spanning dev rows r -> r+1; a rebalanced
    // panel is already label-aligned.
    const bool fresh = panel.dev_timestamps.size() == panel.diff_timestamps.size() + 1;
    for (Eigen::Index i = 0; i < R; ++i) {
        const Eigen::Index r = keep[static_cast<std::size_t>(i)];
        const Eigen::Index dev_row = fresh ? r + 1 : r;
        for (Eigen::Index c = 0; c < m; ++c) {
            out.diffs(i, c) = panel.diffs(r, cols[static_cast<std::size_t>(c)]);
            out.deviations(i, c) = panel.deviations(dev_row, cols[static_cast<std::size_t>(c)]);
        }
        out.diff_timestamps.push_back(panel.diff_timestamps[static_cast<std::size_t>(r)]);
        out.dev_timestamps.push_back(panel.diff_timestamps[static_cast<std::size_t>(r)]);
    }
    return out;
}

PricePanel resample_last(const PricePanel& panel, std::int64_t bucket_seconds) {
    if (bucket_seconds <= 0) throw DomainError("resample_last: bucket must be positive");
    const Eigen::Index n = panel.cols();
    std::vector<std::int64_t> ts;
    std::vector<Eigen::Index> last_row;
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        std::int64_t raw = panel.timestamps[static_cast<std::size_t>(t)];
        std::int64_t bucket = raw - ((raw % bucket_seconds) + bucket_seconds) % bucket_seconds;
        if (!ts.empty() && bucket == ts.back()) {
            last_row.back() = t;
        } else {
            ts.push_back(bucket);
            last_row.push_back(t);
        }
    }
    PricePanel out;
    out.assets = panel.assets;
    out.timestamps = ts;
    out.values.resize(static_cast<Eigen::Index>(ts.size()), n);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        // carry the last finite value inside the bucket, per asset
        for (Eigen::Index j = 0; j < n; ++j) {
            double v = kNaN;
            const Eigen::Index lo = (i == 0) ? 0 : last_row[i - 1] + 1;
            for (Eigen::Index r = last_row[i]; r >= lo; --r) {
                if (std::isfinite(panel.values(r, j))) {
                    v = panel.values(r, j);
                    break;
                }
            }
            out.values(static_cast<Eigen::Index>(i), j) = v;
        }
    }
    return out;
}

} // namespace spill
