#include "spill/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace spill {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(path + ": invalid JSON: " + e.what());
    }

    RunConfig cfg;
    cfg.input = j.value("input", "");
    cfg.asset_meta = j.value("asset_meta", "");
    if (j.contains("subset")) cfg.subset = j.at("subset").get<std::vector<std::string>>();
    if (j.contains("quantiles")) cfg.quantiles = j.at("quantiles").get<std::vector<double>>();
    cfg.lags = j.value("lags", 1);
    cfg.horizon = j.value("horizon", 10);
    if (j.contains("rolling")) {
        const auto& r = j.at("rolling");
        cfg.window = r.value("window", std::size_t{200});
        cfg.step = r.value("step", std::size_t{5});
    }
    cfg.event_spec = j.value("event", "");
    cfg.out_dir = j.value("out", ".");
    if (j.contains("formats")) {
        const auto& f = j.at("formats");
        cfg.emit_csv = f.value("csv", true);
        cfg.emit_json = f.value("json", true);
    }
    cfg.stamp = j.value("stamp", false);
    cfg.threads = j.value("threads", 0);
    cfg.edge_threshold = j.value("edge_threshold", 0.01);
    if (j.contains("start")) cfg.start = parse_instant(j.at("start").get<std::string>());
    if (j.contains("end")) cfg.end = parse_instant(j.at("end").get<std::string>());
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.input.empty()) throw IngestError("config: 'input' is required");
    if (cfg.quantiles.empty()) throw IngestError("config: need at least one quantile");
    double prev = 0.0;
    for (double q : cfg.quantiles) {
        if (!(q > 0.0 && q < 1.0))
            throw IngestError("config: quantile " + format_double(q) +
                              " outside (0,1)");
        if (q <= prev) throw IngestError("config: quantiles must be strictly increasing");
        prev = q;
    }
    if (cfg.lags < 1) throw IngestError("config: lags must be >= 1");
    if (cfg.horizon < 1) throw IngestError("config: horizon must be >= 1");
    if (cfg.window && *cfg.window < 1) throw IngestError("config: window must be >= 1");
    if (cfg.step && *cfg.step < 1) throw IngestError("config: step must be >= 1");
    if (cfg.edge_threshold < 0) throw IngestError("config: edge_threshold must be >= 0");
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["input"] = cfg.input;
    if (!cfg.asset_meta.empty()) j["asset_meta"] = cfg.asset_meta;
    if (!cfg.subset.empty()) j["subset"] = cfg.subset;
    j["quantiles"] = cfg.quantiles;
    j["lags"] = cfg.lags;
    j["horizon"] = cfg.horizon;
    if (cfg.window) j["rolling"] = {{"window", *cfg.window}, {"step", cfg.step.value_or(5)}};
    if (!cfg.event_spec.empty()) j["event"] = cfg.event_spec;
    j["out"] = cfg.out_dir;
    j["formats"] = {{"csv", cfg.emit_csv}, {"json", cfg.emit_json}};
    j["threads"] = cfg.threads;
    j["edge_threshold"] = cfg.edge_threshold;
    if (cfg.start) j["start"] = format_instant(*cfg.start);
    if (cfg.end) j["end"] = format_instant(*cfg.end);
    return j;
}

EventConfig load_event_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open event spec '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(path + ": invalid JSON: " + e.what());
    }
    EventConfig cfg;
    try {
        cfg.window.name = j.value("name", "event");
        cfg.window.affected_asset = j.at("affected").get<std::string>();
        cfg.window.event_time = parse_instant(j.at("event_time").get<std::string>());
        cfg.window.calm_start = parse_instant(j.at("calm").at(0).get<std::string>());
        cfg.window.calm_end = parse_instant(j.at("calm").at(1).get<std::string>());
        cfg.window.crisis_start = parse_instant(j.at("crisis").at(0).get<std::string>());
        cfg.window.crisis_end = parse_instant(j.at("crisis").at(1).get<std::string>());
    } catch (const json::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    if (j.contains("donors")) cfg.donors = j.at("donors").get<std::vector<std::string>>();
    cfg.proxy_window = j.value("proxy_window", 24);
    if (j.contains("resample_seconds"))
        cfg.resample_seconds = j.at("resample_seconds").get<std::int64_t>();
    return cfg;
}

DgpSpec dgp_spec_from_json(const json& j) {
    DgpSpec spec;
    try {
        spec.n = j.at("n").get<int>();
        spec.p = j.value("p", 1);
        spec.T = j.at("T").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{1});

        auto read_mats = [&](const json& arr) {
            std::vector<Eigen::MatrixXd> mats;
            // either one matrix or a list of p matrices
            const bool single = !arr.empty() && arr.at(0).is_array() && !arr.at(0).empty() &&
                                arr.at(0).at(0).is_number();
            const json list = single ? json::array({arr}) : arr;
            for (const auto& m : list) {
                Eigen::MatrixXd M(m.size(), m.at(0).size());
                for (std::size_t r = 0; r < m.size(); ++r)
                    for (std::size_t c = 0; c < m.at(r).size(); ++c)
                        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                            m.at(r).at(c).get<double>();
                mats.push_back(std::move(M));
            }
            return mats;
        };
        auto read_mat = [&](const json& m) {
            Eigen::MatrixXd M(m.size(), m.at(0).size());
            for (std::size_t r = 0; r < m.size(); ++r)
                for (std::size_t c = 0; c < m.at(r).size(); ++c)
                    M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        m.at(r).at(c).get<double>();
            return M;
        };

        spec.B = read_mats(j.at("B"));
        spec.sigma = read_mat(j.at("sigma"));
        if (j.contains("dist")) {
            const auto& d = j.at("dist");
            const std::string type = d.is_string() ? d.get<std::string>()
                                                   : d.value("type", "gaussian");
            if (type == "gaussian") {
                spec.dist = DgpSpec::Dist::Gaussian;
            } else if (type == "student_t") {
                spec.dist = DgpSpec::Dist::StudentT;
                spec.df = d.is_object() ? d.value("df", 3.0) : 3.0;
            } else {
                throw SpecError("dgp: unknown dist '" + type + "'");
            }
        }
        if (j.contains("regime_switch")) {
            const auto& rs = j.at("regime_switch");
            RegimeSwitch sw;
            sw.switch_time = rs.at("switch_time").get<std::size_t>();
            sw.B = read_mats(rs.at("B"));
            sw.sigma = read_mat(rs.at("sigma"));
            spec.regime_switch = std::move(sw);
        }
    } catch (const json::exception& e) {
        throw SpecError(std::string("dgp spec: ") + e.what());
    }
    return spec;
}

DgpSpec load_dgp_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open dgp spec '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(path + ": invalid JSON: " + e.what());
    }
    return dgp_spec_from_json(j);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    if (!out) throw Error("short write on '" + path + "'");
}

namespace {

json matrix_rows(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_values(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

} // namespace

std::string fevd_to_json(const FevdMatrix& fevd, const json& config) {
    json j;
    j["tau"] = fevd.tau.value();
    j["horizon"] = fevd.horizon;
    j["assets"] = fevd.asset_order;
    j["normalized"] = matrix_rows(fevd.normalized);
    j["raw"] = matrix_rows(fevd.raw);
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string indices_to_json(const SpilloverIndices& idx, const json& config) {
    json j;
    j["tau"] = idx.tau.value();
    j["assets"] = idx.asset_order;
    j["from"] = vector_values(idx.from);
    j["to"] = vector_values(idx.to);
    j["net"] = vector_values(idx.net);
    j["total"] = idx.total;
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string indices_to_csv(const SpilloverIndices& idx, const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "asset,from_pct,to_pct,net_pct\n";
    for (std::size_t j = 0; j < idx.asset_order.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        out << idx.asset_order[j] << ',' << format_pct(100.0 * idx.from[i]) << ','
            << format_pct(100.0 * idx.to[i]) << ',' << format_pct(100.0 * idx.net[i]) << '\n';
    }
    out << "TOTAL," << format_pct(100.0 * idx.total) << ",,\n";
    return out.str();
}

std::string relative_to_json(const RelativeSpillover& rel, const json& config) {
    json j;
    j["tau_low"] = rel.tau_low;
    j["tau_mid"] = rel.tau_mid;
    j["tau_high"] = rel.tau_high;
    j["assets"] = rel.asset_order;
    j["left"] = {{"from", vector_values(rel.left_from)},
                 {"to", vector_values(rel.left_to)},
                 {"net", vector_values(rel.left_net)},
                 {"total", rel.left_total}};
    j["right"] = {{"from", vector_values(rel.right_from)},
                  {"to", vector_values(rel.right_to)},
                  {"net", vector_values(rel.right_net)},
                  {"total", rel.right_total}};
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string relative_to_csv(const RelativeSpillover& rel, const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "asset,left_from_pp,left_to_pp,left_net_pp,right_from_pp,right_to_pp,right_net_pp\n";
    for (std::size_t j = 0; j < rel.asset_order.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        out << rel.asset_order[j] << ',' << format_pct(100.0 * rel.left_from[i]) << ','
            << format_pct(100.0 * rel.left_to[i]) << ',' << format_pct(100.0 * rel.left_net[i])
            << ',' << format_pct(100.0 * rel.right_from[i]) << ','
            << format_pct(100.0 * rel.right_to[i]) << ',' << format_pct(100.0 * rel.right_net[i])
            << '\n';
    }
    out << "TOTAL," << format_pct(100.0 * rel.left_total) << ",,," << format_pct(100.0 * rel.right_total)
        << ",,\n";
    return out.str();
}

std::string edges_to_json(const std::vector<NetworkEdge>& edges, const json& config) {
    json arr = json::array();
    for (const auto& e : edges)
        arr.push_back({{"source", e.source},
                       {"target", e.target},
                       {"weight", e.weight},
                       {"net_weight", e.net_weight}});
    json j;
    j["edges"] = std::move(arr);
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string flows_to_json(const std::vector<CategoryFlow>& flows, const json& config) {
    json arr = json::array();
    for (const auto& f : flows)
        arr.push_back({{"from", to_string(f.from)}, {"to", to_string(f.to)}, {"flow", f.flow}});
    json j;
    j["flows"] = std::move(arr);
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string pair_deltas_to_csv(const std::vector<PairDelta>& deltas, const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "source,target,delta_pp\n";
    for (const auto& d : deltas)
        out << d.source << ',' << d.target << ',' << format_double(d.delta_pp) << '\n';
    return out.str();
}

std::string rolling_to_csv(const RollingResult& r, const std::vector<std::string>& assets,
                           const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "anchor,tau,total";
    for (const auto& a : assets) out << ",from_" << a;
    for (const auto& a : assets) out << ",to_" << a;
    for (const auto& a : assets) out << ",net_" << a;
    out << ",flags\n";
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        for (std::size_t q = 0; q < r.taus.size(); ++q) {
            const RollingCell& cell = r.cells[i][q];
            out << format_instant(r.anchors[i]) << ',' << format_double(r.taus[q]) << ',';
            if (cell.ok()) {
                const SpilloverIndices& idx = *cell.indices;
                out << format_double(idx.total);
                for (Eigen::Index j = 0; j < idx.from.size(); ++j)
                    out << ',' << format_double(idx.from[j]);
                for (Eigen::Index j = 0; j < idx.to.size(); ++j)
                    out << ',' << format_double(idx.to[j]);
                for (Eigen::Index j = 0; j < idx.net.size(); ++j)
                    out << ',' << format_double(idx.net[j]);
            } else {
                out << std::string(3 * assets.size(), ','); // 1+3n empty value fields
            }
            out << ',' << cell.flags() << '\n';
        }
    }
    return out.str();
}

std::string rolling_to_plot_json(const RollingResult& r, const std::vector<std::string>& assets,
                                 const json& config) {
    json series = json::array();
    for (std::size_t q = 0; q < r.taus.size(); ++q) {
        json s;
        s["tau"] = r.taus[q];
        json anchors = json::array(), total = json::array();
        json net = json::object();
        for (const auto& a : assets) net[a] = json::array();
        for (std::size_t i = 0; i < r.cells.size(); ++i) {
            anchors.push_back(format_instant(r.anchors[i]));
            const RollingCell& cell = r.cells[i][q];
            if (cell.ok()) {
                total.push_back(cell.indices->total);
                for (std::size_t j = 0; j < assets.size(); ++j)
                    net[assets[j]].push_back(cell.indices->net[static_cast<Eigen::Index>(j)]);
            } else {
                total.push_back(nullptr);
                for (const auto& a : assets) net[a].push_back(nullptr);
            }
        }
        s["anchors"] = std::move(anchors);
        s["total"] = std::move(total);
        s["net"] = std::move(net);
        series.push_back(std::move(s));
    }
    json j;
    j["window"] = r.plan.w;
    j["step"] = r.plan.s;
    j["horizon"] = r.horizon;
    j["lags"] = r.p;
    j["assets"] = assets;
    j["series"] = std::move(series);
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string fr_results_to_csv(const std::vector<FrResult>& results, const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "target,n_calm,n_crisis,rho_calm,rho_crisis,delta,rho_adj,delta_rho_adj,z_stat,"
           "significant\n";
    for (const auto& r : results) {
        out << r.target_asset << ',' << r.n_calm << ',' << r.n_crisis << ','
            << format_double(r.rho_calm) << ',' << format_double(r.rho_crisis) << ','
            << format_double(r.delta) << ',' << format_double(r.rho_adj) << ','
            << format_double(r.delta_rho_adj) << ',' << format_double(r.z_stat) << ','
            << (r.significant ? "true" : "false") << '\n';
    }
    return out.str();
}

std::string category_means_to_csv(const std::map<AssetCategory, double>& means,
                                  const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "category,mean_delta_rho_adj\n";
    for (const auto& [cat, mean] : means)
        out << to_string(cat) << ',' << format_double(mean) << '\n';
    return out.str();
}

std::string synth_to_json(const SyntheticControlResult& res,
                          const std::vector<std::int64_t>& path_timestamps, const json& config) {
    json j;
    j["treated"] = res.treated;
    j["donors"] = res.donors;
    json weights = json::object();
    for (std::size_t d = 0; d < res.donors.size(); ++d)
        weights[res.donors[d]] = res.weights[static_cast<Eigen::Index>(d)];
    j["weights"] = std::move(weights);
    j["pre_rmse"] = res.pre_rmse;
    j["effect"] = res.effect;
    json placebo = json::object();
    for (std::size_t d = 0; d < res.donors.size(); ++d)
        placebo[res.donors[d]] = res.placebo_effects[d];
    j["placebo_effects"] = std::move(placebo);
    j["p_value"] = res.p_value;
    json ts = json::array();
    for (std::int64_t t : path_timestamps) ts.push_back(format_instant(t));
    j["paths"] = {{"timestamps", std::move(ts)},
                  {"treated", vector_values(res.treated_path)},
                  {"synthetic", vector_values(res.synthetic_path)}};
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string panel_to_csv(const DeviationPanel& panel, const std::string& header) {
    std::ostringstream out;
    out << header;
    out << "date";
    for (const auto& a : panel.assets) out << ',' << a.id;
    out << '\n';

    const Eigen::Index n = panel.n_assets();
    auto emit_row = [&](std::int64_t ts, const Eigen::RowVectorXd& dev_row) {
        out << format_instant(ts);
        for (Eigen::Index j = 0; j < n; ++j) {
            out << ',';
            const double dev = dev_row[j];
            if (!std::isfinite(dev)) continue; // missing -> empty cell
            const bool anchor = is_anchor(panel.assets[static_cast<std::size_t>(j)].category);
            out << format_double(anchor ? std::exp(dev / 10000.0) : 1.0 + dev / 10000.0);
        }
        out << '\n';
    };

    const bool fresh = panel.dev_timestamps.size() == panel.diff_timestamps.size() + 1;
    if (fresh) {
        for (std::size_t r = 0; r < panel.dev_timestamps.size(); ++r)
            emit_row(panel.dev_timestamps[r], panel.deviations.row(static_cast<Eigen::Index>(r)));
    } else {
        // Rebalanced/simulated panel: deviation rows sit at the diff labels,
        // so prepend a base row that reproduces the first diff on reload.
        const std::int64_t step = panel.diff_timestamps.size() > 1
                                      ? panel.diff_timestamps[1] - panel.diff_timestamps[0]
                                      : 86400;
        emit_row(panel.diff_timestamps.front() - step,
                 panel.deviations.row(0) - panel.diffs.row(0));
        for (std::size_t r = 0; r < panel.diff_timestamps.size(); ++r)
            emit_row(panel.diff_timestamps[r], panel.deviations.row(static_cast<Eigen::Index>(r)));
    }
    return out.str();
}

} // namespace spill
