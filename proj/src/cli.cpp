#include "spill/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "spill/contagion.hpp"
#include "spill/dgp.hpp"
#include "spill/fevd.hpp"
#include "spill/io.hpp"
#include "spill/rolling.hpp"
#include "spill/spillover.hpp"

namespace spill {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> parse_double_list(const std::string& text, char sep = ',') {
    std::vector<double> out;
    for (const auto& tok : split_list(text, sep)) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != tok.size()) throw IngestError("not a number: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& tok : split_list(text, ',')) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != tok.size()) throw IngestError("not an integer: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

int effective_threads(int requested) {
    int threads = requested;
    if (const char* env = std::getenv("SPILL_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) threads = threads > 0 ? std::min(threads, cap) : cap;
    }
    return threads;
}

std::string artifact_header(const json& config, bool stamp) {
    std::string h = "# config: " + config.dump() + "\n";
    if (stamp) h += "# generated_at: " + format_instant(static_cast<std::int64_t>(time(nullptr))) + "\n";
    return h;
}

struct LoadedPanel {
    DeviationPanel raw;      // full transform, possibly unbalanced
    DeviationPanel balanced; // subset + [start,end] restriction, listwise-deleted
};

LoadedPanel load_panel(const RunConfig& cfg) {
    PanelSchema schema;
    schema.asset_ids = cfg.subset;
    if (!cfg.asset_meta.empty()) schema.categories = load_asset_meta(cfg.asset_meta);
    const PricePanel prices = load_csv(cfg.input, schema);

    LoadedPanel out;
    out.raw = to_deviations(prices);
    const std::int64_t start = cfg.start.value_or(std::numeric_limits<std::int64_t>::min() + 1);
    const std::int64_t end = cfg.end.value_or(std::numeric_limits<std::int64_t>::max());
    out.balanced = balanced_window(out.raw, out.raw.asset_ids(), start, end);
    return out;
}

std::string tau_tag(double tau) { return "tau" + format_double(tau); }

// Quantile closest to the median plays the reference role.
std::size_t median_slot(const std::vector<double>& taus) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (std::abs(taus[i] - 0.5) < std::abs(taus[best] - 0.5)) best = i;
    return best;
}

int cmd_fit(const RunConfig& cfg) {
    const json cj = config_to_json(cfg);
    const std::string header = artifact_header(cj, cfg.stamp);
    const LoadedPanel panel = load_panel(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);

    std::vector<FevdMatrix> fevds;
    std::vector<SpilloverIndices> indices;
    for (double tau : cfg.quantiles) {
        const QvarSpec spec{cfg.lags, QuantileLevel(tau)};
        const QvarModel model = fit_qvar(panel.balanced, spec);
        const double radius = stability_check(model);
        if (radius >= 1.0)
            std::cerr << "spill fit: warning: tau=" << tau << " companion spectral radius "
                      << radius << " >= 1; finite-horizon decomposition still reported\n";
        if (!model.all_converged)
            std::cerr << "spill fit: warning: tau=" << tau
                      << " some equations hit the iteration cap\n";
        FevdMatrix fevd = generalized_fevd(model, cfg.horizon);
        SpilloverIndices idx = spillover_indices(fevd);

        const std::string tag = tau_tag(tau);
        if (cfg.emit_json) {
            write_text_file((out_dir / ("fevd_" + tag + ".json")).string(),
                            fevd_to_json(fevd, cj));
            write_text_file((out_dir / ("indices_" + tag + ".json")).string(),
                            indices_to_json(idx, cj));
            write_text_file((out_dir / ("network_" + tag + ".json")).string(),
                            edges_to_json(network_edges(fevd, cfg.edge_threshold), cj));
            write_text_file((out_dir / ("flows_" + tag + ".json")).string(),
                            flows_to_json(category_flows(fevd, panel.balanced.assets), cj));
        }
        if (cfg.emit_csv)
            write_text_file((out_dir / ("indices_" + tag + ".csv")).string(),
                            indices_to_csv(idx, header));
        fevds.push_back(std::move(fevd));
        indices.push_back(std::move(idx));
    }

    if (cfg.quantiles.size() >= 3) {
        const std::size_t mid = median_slot(cfg.quantiles);
        const RelativeSpillover rel =
            relative_spillover(indices.front(), indices[mid], indices.back());
        if (cfg.emit_json)
            write_text_file((out_dir / "relative.json").string(), relative_to_json(rel, cj));
        if (cfg.emit_csv)
            write_text_file((out_dir / "relative.csv").string(), relative_to_csv(rel, header));
        if (cfg.emit_csv) {
            write_text_file((out_dir / "top_deltas_left.csv").string(),
                            pair_deltas_to_csv(pairwise_deltas(fevds.front(), fevds[mid], 10),
                                               header));
            write_text_file((out_dir / "top_deltas_right.csv").string(),
                            pair_deltas_to_csv(pairwise_deltas(fevds.back(), fevds[mid], 10),
                                               header));
        }
    }
    return 0;
}

int cmd_rolling(const RunConfig& cfg) {
    if (!cfg.window) throw PlanError("rolling: config must provide a rolling window");
    const json cj = config_to_json(cfg);
    const std::string header = artifact_header(cj, cfg.stamp);
    const LoadedPanel panel = load_panel(cfg);

    const WindowPlan plan = plan_windows(static_cast<std::size_t>(panel.balanced.n_obs()),
                                         *cfg.window, cfg.step.value_or(5));
    std::vector<QvarSpec> specs;
    specs.reserve(cfg.quantiles.size());
    for (double tau : cfg.quantiles) specs.push_back({cfg.lags, QuantileLevel(tau)});

    const RollingResult result = rolling_run(panel.balanced, plan, specs, cfg.horizon,
                                             effective_threads(cfg.threads));

    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);
    const auto assets = panel.balanced.asset_ids();
    if (cfg.emit_csv)
        write_text_file((out_dir / "rolling.csv").string(),
                        rolling_to_csv(result, assets, header));
    if (cfg.emit_json)
        write_text_file((out_dir / "rolling_plot.json").string(),
                        rolling_to_plot_json(result, assets, cj));
    return 0;
}

int cmd_event(const RunConfig& cfg) {
    if (cfg.event_spec.empty()) throw IngestError("event: config must provide an event spec");
    const EventConfig event = load_event_config(cfg.event_spec);
    const json cj = config_to_json(cfg);
    const std::string header = artifact_header(cj, cfg.stamp);

    PanelSchema schema;
    schema.asset_ids = cfg.subset;
    if (!cfg.asset_meta.empty()) schema.categories = load_asset_meta(cfg.asset_meta);
    PricePanel prices = load_csv(cfg.input, schema);
    if (event.resample_seconds) prices = resample_last(prices, *event.resample_seconds);
    const DeviationPanel panel = to_deviations(prices);

    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);

    // Forbes-Rigobon block.
    std::vector<std::string> targets;
    for (const auto& id : panel.asset_ids())
        if (id != event.window.affected_asset) targets.push_back(id);
    const std::vector<FrResult> fr = fr_test(panel, event.window, targets);
    write_text_file((out_dir / "fr_table.csv").string(), fr_results_to_csv(fr, header));
    write_text_file((out_dir / "fr_category_means.csv").string(),
                    category_means_to_csv(category_contagion(fr, panel.assets), header));

    // Total-spillover shift around the event.
    {
        const EventSpilloverDelta d =
            event_spillover_delta(panel, event.window, cfg.lags, cfg.horizon);
        std::ostringstream out;
        out << header << "event,affected,pre_total_pct,during_total_pct,delta_pp\n";
        out << event.window.name << ',' << event.window.affected_asset << ','
            << format_pct(d.pre_total_pct) << ',' << format_pct(d.during_total_pct) << ','
            << format_pct(d.delta_pp) << '\n';
        write_text_file((out_dir / "event_spillover.csv").string(), out.str());
    }

    // Synthetic control block; a thin donor pool must not abort the FR
    // outputs above.
    try {
        std::vector<std::string> donors = event.donors;
        if (donors.empty()) donors = targets;
        std::vector<std::string> cols = donors;
        cols.insert(cols.begin(), event.window.affected_asset);
        const DeviationPanel synth_panel =
            balanced_window(panel, cols, event.window.calm_start, event.window.crisis_end);
        const Eigen::MatrixXd proxy = spillover_proxy(synth_panel, event.proxy_window);

        auto range_of = [&](std::int64_t lo, std::int64_t hi) {
            std::size_t first = synth_panel.diff_timestamps.size(), last = 0;
            for (std::size_t r = 0; r < synth_panel.diff_timestamps.size(); ++r) {
                const std::int64_t ts = synth_panel.diff_timestamps[r];
                if (ts < lo || ts > hi) continue;
                first = std::min(first, r);
                last = std::max(last, r);
            }
            if (first > last) throw InsufficientDataError("event: empty window after balancing");
            return std::make_pair(first, last);
        };
        const auto pre = range_of(event.window.calm_start, event.window.calm_end);
        const auto ev = range_of(event.window.crisis_start, event.window.crisis_end);
        const SyntheticControlResult synth =
            synth_control(proxy, synth_panel.asset_ids(), event.window.affected_asset, donors,
                          pre, ev);
        std::vector<std::int64_t> path_ts;
        for (std::size_t r = pre.first; r <= pre.second; ++r)
            path_ts.push_back(synth_panel.diff_timestamps[r]);
        for (std::size_t r = ev.first; r <= ev.second; ++r)
            path_ts.push_back(synth_panel.diff_timestamps[r]);
        write_text_file((out_dir / "synth_control.json").string(),
                        synth_to_json(synth, path_ts, cj));
    } catch (const Error& e) {
        json j;
        j["error"] = e.what();
        j["config"] = cj;
        write_text_file((out_dir / "synth_control.json").string(), j.dump(2) + "\n");
        std::cerr << "spill event: synthetic control skipped: " << e.what() << "\n";
    }
    return 0;
}

int cmd_robustness(const RunConfig& cfg, const std::vector<int>& lags,
                   const std::vector<int>& horizons,
                   const std::vector<std::vector<double>>& quantile_sets) {
    if (lags.empty() || horizons.empty() || quantile_sets.empty())
        throw IngestError("robustness: empty grid");
    for (const auto& qs : quantile_sets)
        if (qs.empty()) throw IngestError("robustness: empty quantile set");

    const json cj = config_to_json(cfg);
    const std::string header = artifact_header(cj, cfg.stamp);
    const LoadedPanel panel = load_panel(cfg);

    // Fits are shared across horizons within a panel row.
    std::map<std::pair<int, double>, QvarModel> cache;
    auto total_of = [&](int p, double tau, int H) -> std::pair<bool, std::string> {
        const auto key = std::make_pair(p, tau);
        try {
            auto it = cache.find(key);
            if (it == cache.end()) {
                const QvarSpec spec{p, QuantileLevel(tau)};
                it = cache.emplace(key, fit_qvar(panel.balanced, spec)).first;
            }
            const double total =
                spillover_indices(generalized_fevd(it->second, H)).total * 100.0;
            return {true, format_double(total)};
        } catch (const Error& e) {
            return {false, std::string("NA:") + e.what()};
        }
    };

    struct Row {
        std::string panel_name, spec_label;
        std::vector<double> taus;
        std::vector<std::pair<bool, std::string>> totals;
    };
    std::vector<Row> rows;
    auto add_row = [&](const std::string& pn, const std::string& label, int p, int H,
                       const std::vector<double>& taus) {
        Row row{pn, label, taus, {}};
        for (double tau : taus) row.totals.push_back(total_of(p, tau, H));
        rows.push_back(std::move(row));
    };

    for (int p : lags)
        add_row("A:lag_order", "p=" + std::to_string(p), p, cfg.horizon, cfg.quantiles);
    for (int H : horizons)
        add_row("B:horizon", "H=" + std::to_string(H), cfg.lags, H, cfg.quantiles);
    for (const auto& qs : quantile_sets) {
        std::string label = "tau=";
        for (std::size_t i = 0; i < qs.size(); ++i)
            label += (i ? "/" : "") + format_double(qs[i]);
        add_row("C:quantiles", label, cfg.lags, cfg.horizon, qs);
    }

    fs::create_directories(cfg.out_dir);
    const fs::path out_dir(cfg.out_dir);
    if (cfg.emit_csv) {
        std::ostringstream out;
        out << header << "panel,spec,taus,";
        std::size_t width = 0;
        for (const auto& r : rows) width = std::max(width, r.taus.size());
        for (std::size_t i = 0; i < width; ++i) out << "total_" << (i + 1) << (i + 1 < width ? "," : "");
        out << '\n';
        for (const auto& r : rows) {
            out << r.panel_name << ',' << r.spec_label << ',';
            for (std::size_t i = 0; i < r.taus.size(); ++i)
                out << (i ? "/" : "") << format_double(r.taus[i]);
            for (std::size_t i = 0; i < width; ++i) {
                out << ',';
                if (i < r.totals.size())
                    out << (r.totals[i].first ? format_pct(std::stod(r.totals[i].second))
                                              : r.totals[i].second);
            }
            out << '\n';
        }
        write_text_file((out_dir / "robustness.csv").string(), out.str());
    }
    if (cfg.emit_json) {
        json arr = json::array();
        for (const auto& r : rows) {
            json jr;
            jr["panel"] = r.panel_name;
            jr["spec"] = r.spec_label;
            jr["taus"] = r.taus;
            json totals = json::array();
            for (const auto& [ok, text] : r.totals)
                totals.push_back(ok ? json(std::stod(text)) : json(text));
            jr["totals_pct"] = std::move(totals);
            arr.push_back(std::move(jr));
        }
        json j;
        j["rows"] = std::move(arr);
        j["config"] = cj;
        write_text_file((out_dir / "robustness.json").string(), j.dump(2) + "\n");
    }
    return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_path, bool stamp) {
    const DgpSpec spec = load_dgp_spec(spec_path);
    const DeviationPanel panel = simulate(spec);
    json cj;
    cj["dgp_spec"] = spec_path;
    cj["seed"] = spec.seed;
    cj["T"] = spec.T;
    cj["n"] = spec.n;
    const fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_text_file(out_path, panel_to_csv(panel, artifact_header(cj, stamp)));
    return 0;
}

void apply_common_overrides(CLI::App* cmd, RunConfig& cfg, const std::string& input,
                            const std::string& meta, const std::string& subset,
                            const std::string& quantiles, int lags, int horizon,
                            const std::string& out, int threads, double edge_threshold,
                            bool stamp, const std::string& start, const std::string& end,
                            bool scalar_ph) {
    if (cmd->count("--input")) cfg.input = input;
    if (cmd->count("--meta")) cfg.asset_meta = meta;
    if (cmd->count("--subset")) cfg.subset = split_list(subset, ',');
    if (cmd->count("--quantiles")) cfg.quantiles = parse_double_list(quantiles);
    if (scalar_ph && cmd->count("--lags")) cfg.lags = lags;
    if (scalar_ph && cmd->count("--horizon")) cfg.horizon = horizon;
    if (cmd->count("--out")) cfg.out_dir = out;
    if (cmd->count("--threads")) cfg.threads = threads;
    if (cmd->count("--edge-threshold")) cfg.edge_threshold = edge_threshold;
    if (cmd->count("--stamp")) cfg.stamp = stamp;
    if (cmd->count("--start")) cfg.start = parse_instant(start);
    if (cmd->count("--end")) cfg.end = parse_instant(end);
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Quantile-VAR spillover analysis"};
    app.require_subcommand(1);

    std::string config_path, input, meta, subset, quantiles, out = ".", start, end;
    int lags = 1, horizon = 10, threads = 0;
    double edge_threshold = 0.01;
    bool stamp = false;
    std::size_t window = 200, step = 5;
    std::string event_path, spec_path, out_csv;
    std::string grid_lags, grid_horizons, grid_qsets;

    // scalar_ph: whether --lags/--horizon take single values; the robustness
    // grid reuses those names for comma lists instead.
    auto add_common = [&](CLI::App* cmd, bool scalar_ph = true) {
        cmd->add_option("--config", config_path, "run configuration JSON");
        cmd->add_option("--input", input, "panel CSV path");
        cmd->add_option("--meta", meta, "asset metadata JSON path");
        cmd->add_option("--subset", subset, "comma-separated asset ids");
        cmd->add_option("--quantiles", quantiles, "comma-separated quantile levels");
        if (scalar_ph) {
            cmd->add_option("--lags", lags, "lag order p");
            cmd->add_option("--horizon", horizon, "forecast horizon H");
        }
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--threads", threads, "worker cap (0 = hardware)");
        cmd->add_option("--edge-threshold", edge_threshold, "network edge emission threshold");
        cmd->add_flag("--stamp", stamp, "prepend a generated-at header line");
        cmd->add_option("--start", start, "panel start instant");
        cmd->add_option("--end", end, "panel end instant");
    };

    CLI::App* fit = app.add_subcommand("fit", "full-sample QVAR spillover estimation");
    add_common(fit);

    CLI::App* rolling = app.add_subcommand("rolling", "rolling-window spillover dynamics");
    add_common(rolling);
    rolling->add_option("--window", window, "window length in observations");
    rolling->add_option("--step", step, "step size in observations");

    CLI::App* event = app.add_subcommand("event", "event study: contagion tests");
    add_common(event);
    event->add_option("--event", event_path, "event spec JSON");

    CLI::App* robustness = app.add_subcommand("robustness", "parameter sensitivity grid");
    add_common(robustness, /*scalar_ph=*/false);
    robustness->add_option("--lags", grid_lags, "comma-separated lag orders");
    robustness->add_option("--horizons", grid_horizons, "comma-separated horizons");
    robustness->add_option("--quantile-sets", grid_qsets,
                           "comma-separated tau triples, e.g. 0.05/0.5/0.95");

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic panel CSV");
    simulate->add_option("--spec", spec_path, "DGP spec JSON")->required();
    simulate->add_option("--out", out_csv, "output CSV path")->required();
    simulate->add_flag("--stamp", stamp, "prepend a generated-at header line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(spec_path, out_csv, stamp);

        RunConfig cfg;
        if (!config_path.empty()) cfg = load_run_config(config_path);
        CLI::App* active = fit->parsed() ? fit
                           : rolling->parsed() ? rolling
                           : event->parsed() ? event
                                             : robustness;
        apply_common_overrides(active, cfg, input, meta, subset, quantiles, lags, horizon, out,
                               threads, edge_threshold, stamp, start, end,
                               /*scalar_ph=*/active != robustness);
        validate_config(cfg);

        if (fit->parsed()) return cmd_fit(cfg);
        if (rolling->parsed()) {
            if (rolling->count("--window") || !cfg.window) cfg.window = window;
            if (rolling->count("--step") || !cfg.step) cfg.step = step;
            return cmd_rolling(cfg);
        }
        if (event->parsed()) {
            if (event->count("--event")) cfg.event_spec = event_path;
            return cmd_event(cfg);
        }
        // robustness: grid lists default to the baseline configuration
        std::vector<int> glags = robustness->count("--lags") ? parse_int_list(grid_lags)
                                                             : std::vector<int>{cfg.lags};
        std::vector<int> ghor = robustness->count("--horizons") ? parse_int_list(grid_horizons)
                                                                : std::vector<int>{cfg.horizon};
        std::vector<std::vector<double>> gqs;
        if (robustness->count("--quantile-sets")) {
            for (const auto& set : split_list(grid_qsets, ','))
                gqs.push_back(parse_double_list(set, '/'));
        } else {
            gqs.push_back(cfg.quantiles);
        }
        return cmd_robustness(cfg, glags, ghor, gqs);
    } catch (const IngestError& e) {
        std::cerr << "spill: config/input error: " << e.what() << "\n";
        return 2;
    } catch (const PlanError& e) {
        std::cerr << "spill: plan error: " << e.what() << "\n";
        return 2;
    } catch (const SpecError& e) {
        std::cerr << "spill: dgp spec error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "spill: invalid parameter: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "spill: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "spill: unexpected failure: " << e.what() << "\n";
        return 1;
    }
}

} // namespace spill
