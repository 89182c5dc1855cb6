#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "spill/contagion.hpp"
#include "spill/dgp.hpp"

using namespace spill;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("volatility-adjusted correlation") {
    CHECK(fr_adjust(0.6, 0.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(fr_adjust(0.6, 3.0) == doctest::Approx(0.6 / std::sqrt(2.92)).epsilon(1e-12));
    CHECK(fr_adjust(0.6, 3.0) == doctest::Approx(0.35112).epsilon(1e-4));
    CHECK(fr_adjust(0.0, 7.5) == 0.0);
    CHECK_THROWS_AS(fr_adjust(0.5, -1.0), DomainError);
    CHECK_THROWS_AS(fr_adjust(1.5, 0.5), DomainError);

    SUBCASE("strictly decreasing in delta for rho in (0,1)") {
        double prev = 1.0;
        for (double delta : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0}) {
            const double v = fr_adjust(0.7, delta);
            CHECK(v < prev);
            prev = v;
        }
    }
    SUBCASE("odd in rho") {
        for (double rho : {0.1, 0.45, 0.9})
            CHECK(fr_adjust(-rho, 2.0) == doctest::Approx(-fr_adjust(rho, 2.0)).epsilon(1e-15));
    }
    SUBCASE("shrinks towards zero when delta is positive") {
        for (double rho : {-0.9, -0.3, 0.2, 0.8})
            CHECK(std::abs(fr_adjust(rho, 1.5)) < std::abs(rho));
        CHECK(fr_adjust(1.0, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

namespace {

// Panel whose crisis window duplicates the calm window exactly.
DeviationPanel duplicated_window_panel(int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    MatrixXd diffs(2 * m, 3);
    for (int t = 0; t < m; ++t) {
        const double shock = noise(rng);
        diffs(t, 0) = shock + 0.3 * noise(rng);
        diffs(t, 1) = 0.6 * shock + noise(rng);
        diffs(t, 2) = noise(rng);
    }
    diffs.bottomRows(m) = diffs.topRows(m);
    return oracles::panel_from_diffs(diffs);
}

EventWindowSpec spec_for(const DeviationPanel& panel, std::size_t calm_rows) {
    EventWindowSpec spec;
    spec.name = "fixture";
    spec.affected_asset = "A1";
    spec.calm_start = panel.diff_timestamps.front();
    spec.calm_end = panel.diff_timestamps[calm_rows - 1];
    spec.crisis_start = panel.diff_timestamps[calm_rows];
    spec.crisis_end = panel.diff_timestamps.back();
    spec.event_time = spec.crisis_start;
    return spec;
}

} // namespace

TEST_CASE("identical calm and crisis windows: nothing to adjust, nothing significant") {
    const DeviationPanel panel = duplicated_window_panel(120, 5);
    const auto results = fr_test(panel, spec_for(panel, 120), {"A2", "A3"});
    REQUIRE(results.size() == 2);
    for (const auto& r : results) {
        CHECK(r.delta == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.delta_rho_adj == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_FALSE(r.significant);
    }
}

TEST_CASE("volatility inflation is removed by the adjustment (Monte Carlo)") {
    // Interdependence null: same dependence structure, crisis variance of the
    // affected series 4x. Raw crisis correlation inflates; the adjusted one
    // hovers around the calm level.
    const double rho = 0.6;
    int raw_up = 0;
    double adj_sum = 0.0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(9000 + s);
        std::normal_distribution<double> noise;
        const int m = 120;
        MatrixXd diffs(2 * m, 2);
        const double se = std::sqrt(1.0 - rho * rho);
        for (int t = 0; t < m; ++t) {
            diffs(t, 0) = noise(rng);
            diffs(t, 1) = rho * diffs(t, 0) + se * noise(rng);
        }
        for (int t = m; t < 2 * m; ++t) {
            diffs(t, 0) = 2.0 * noise(rng);
            diffs(t, 1) = rho * diffs(t, 0) + se * noise(rng);
        }
        const DeviationPanel panel = oracles::panel_from_diffs(diffs);
        const auto results = fr_test(panel, spec_for(panel, m), {"A2"});
        raw_up += results[0].rho_crisis > results[0].rho_calm;
        adj_sum += results[0].delta_rho_adj;
    }
    CHECK(raw_up > seeds * 9 / 10);
    CHECK(std::abs(adj_sum / seeds) < 0.02);
}

TEST_CASE("independent target stays insignificant") {
    int significant = 0;
    int small_adj = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(500 + s);
        std::normal_distribution<double> noise;
        const int m = 150;
        MatrixXd diffs(2 * m, 2);
        for (int t = 0; t < 2 * m; ++t) {
            const double scale = t < m ? 1.0 : 2.0;
            diffs(t, 0) = scale * noise(rng);
            diffs(t, 1) = noise(rng);
        }
        const DeviationPanel panel = oracles::panel_from_diffs(diffs);
        const auto results = fr_test(panel, spec_for(panel, m), {"A2"});
        significant += results[0].significant;
        small_adj += std::abs(results[0].rho_adj) < 2.0 / std::sqrt(static_cast<double>(m));
    }
    CHECK(significant <= seeds / 10);
    CHECK(small_adj >= seeds * 95 / 100);
}

TEST_CASE("fr_test window validation") {
    const DeviationPanel panel = duplicated_window_panel(30, 7);
    EventWindowSpec spec = spec_for(panel, 30);
    SUBCASE("short window") {
        spec.calm_end = spec.calm_start + 3 * 86400;
        CHECK_THROWS_AS(fr_test(panel, spec, {"A2"}), InsufficientDataError);
    }
    SUBCASE("unknown affected asset") {
        spec.affected_asset = "nope";
        CHECK_THROWS_AS(fr_test(panel, spec, {"A2"}), AlignmentError);
    }
    SUBCASE("calm window must precede crisis") {
        spec.calm_start = spec.crisis_start;
        spec.calm_end = spec.crisis_end;
        CHECK_THROWS_AS(fr_test(panel, spec, {"A2"}), AlignmentError);
    }
}

TEST_CASE("category means of adjusted-correlation changes") {
    std::vector<FrResult> results(3);
    results[0].target_asset = "F1";
    results[0].delta_rho_adj = 0.1;
    results[1].target_asset = "F2";
    results[1].delta_rho_adj = -0.1;
    results[2].target_asset = "ALG";
    results[2].delta_rho_adj = 0.07;
    const std::vector<AssetMeta> meta = {{"F1", AssetCategory::FiatBacked},
                                         {"F2", AssetCategory::FiatBacked},
                                         {"ALG", AssetCategory::Algorithmic}};
    const auto means = category_contagion(results, meta);
    CHECK(means.at(AssetCategory::FiatBacked) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(means.at(AssetCategory::Algorithmic) == doctest::Approx(0.07).epsilon(1e-15));
    CHECK(means.count(AssetCategory::CryptoCollateralized) == 0);
}

namespace {

struct SynthFixture {
    MatrixXd outcome;
    std::vector<std::string> ids;
};

// treated column 0; donors d1..d3
SynthFixture mixture_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    const int T = 60;
    SynthFixture fx;
    fx.outcome.resize(T, 4);
    fx.ids = {"treated", "d1", "d2", "d3"};
    for (int t = 0; t < T; ++t)
        for (int j = 1; j < 4; ++j) fx.outcome(t, j) = noise(rng) + 2.0;
    // pre-window mixture; post-window treated drifts away
    for (int t = 0; t < T; ++t) {
        fx.outcome(t, 0) = 0.5 * fx.outcome(t, 1) + 0.5 * fx.outcome(t, 2);
        if (t >= 40) fx.outcome(t, 0) += 1.5;
    }
    return fx;
}

} // namespace

TEST_CASE("synthetic control recovers exact and mixed donors") {
    SUBCASE("exact match puts all weight on the matching donor") {
        SynthFixture fx = mixture_fixture(3);
        fx.outcome.col(0) = fx.outcome.col(2); // identical to d2 everywhere
        const auto res = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                       {0, 39}, {40, 59});
        CHECK(std::abs(res.weights[1] - 1.0) <= 1e-8);
        CHECK(std::abs(res.weights[0]) <= 1e-8);
        CHECK(std::abs(res.weights[2]) <= 1e-8);
        CHECK(res.pre_rmse < 1e-10);
        CHECK(res.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("equal mixture against the fine simplex-grid oracle") {
        const SynthFixture fx = mixture_fixture(5);
        const auto res = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                       {0, 39}, {40, 59});
        // brute grid at 1e-3 resolution over the 3-simplex
        double best = 1e300;
        Eigen::Vector3d best_w;
        const MatrixXd D = fx.outcome.topRows(40).rightCols(3);
        const VectorXd y = fx.outcome.topRows(40).col(0);
        for (int i = 0; i <= 1000; ++i) {
            for (int j = 0; j <= 1000 - i; ++j) {
                const Eigen::Vector3d w(i / 1000.0, j / 1000.0, 1.0 - (i + j) / 1000.0);
                const double obj = (y - D * w).squaredNorm();
                if (obj < best) {
                    best = obj;
                    best_w = w;
                }
            }
        }
        CHECK((res.weights - best_w).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(res.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(res.weights[1] == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("donor ordering does not change the weights") {
        const SynthFixture fx = mixture_fixture(5);
        const auto a = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                     {0, 39}, {40, 59});
        const auto b = synth_control(fx.outcome, fx.ids, "treated", {"d3", "d1", "d2"},
                                     {0, 39}, {40, 59});
        CHECK(a.weights[0] == doctest::Approx(b.weights[1]).epsilon(1e-9));
        CHECK(a.weights[1] == doctest::Approx(b.weights[2]).epsilon(1e-9));
        CHECK(a.weights[2] == doctest::Approx(b.weights[0]).epsilon(1e-9));
    }
    SUBCASE("affine shift of all series preserves an exact match") {
        SynthFixture fx = mixture_fixture(7);
        fx.outcome.col(0) = fx.outcome.col(3);
        MatrixXd shifted = fx.outcome.array() + 11.25;
        const auto base = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                        {0, 39}, {40, 59});
        const auto moved = synth_control(shifted, fx.ids, "treated", {"d1", "d2", "d3"},
                                         {0, 39}, {40, 59});
        CHECK((base.weights - moved.weights).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(std::abs(base.weights[2] - 1.0) <= 1e-8);
    }
}

TEST_CASE("placebo inference assigns exact rank fractions") {
    SUBCASE("treated effect strictly largest") {
        const SynthFixture fx = mixture_fixture(9); // treated jumps by +1.5 post
        const auto res = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                       {0, 39}, {40, 59});
        CHECK(res.placebo_effects.size() == 3);
        CHECK(res.p_value == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("treated effect zero ranks behind noisy placebos") {
        SynthFixture fx = mixture_fixture(11);
        fx.outcome.col(0) = fx.outcome.col(1); // no treatment effect at all
        const auto res = synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                       {0, 39}, {40, 59});
        CHECK(res.p_value >= 0.5); // placebo gaps dominate an exact match
        const double k = res.p_value * 4.0;
        CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-12));
    }
    SUBCASE("fewer than two donors") {
        const SynthFixture fx = mixture_fixture(13);
        CHECK_THROWS_AS(
            synth_control(fx.outcome, fx.ids, "treated", {"d1"}, {0, 39}, {40, 59}),
            DonorPoolError);
    }
    SUBCASE("pre-window shorter than the donor pool") {
        const SynthFixture fx = mixture_fixture(15);
        CHECK_THROWS_AS(synth_control(fx.outcome, fx.ids, "treated", {"d1", "d2", "d3"},
                                      {0, 1}, {40, 59}),
                        InsufficientDataError);
    }
}

TEST_CASE("spillover proxy is a trailing mean of absolute changes") {
    MatrixXd diffs(5, 1);
    diffs << 1.0, -2.0, 3.0, -4.0, 5.0;
    const DeviationPanel panel = oracles::panel_from_diffs(diffs);
    const MatrixXd proxy = spillover_proxy(panel, 3);
    CHECK(proxy(0, 0) == doctest::Approx(1.0));
    CHECK(proxy(1, 0) == doctest::Approx(1.5));
    CHECK(proxy(2, 0) == doctest::Approx(2.0));
    CHECK(proxy(3, 0) == doctest::Approx(3.0));
    CHECK(proxy(4, 0) == doctest::Approx(4.0));
}

TEST_CASE("event spillover delta") {
    SUBCASE("identical windows give exactly zero") {
        const DeviationPanel panel = duplicated_window_panel(150, 21);
        const auto d = event_spillover_delta(panel, spec_for(panel, 150), 1, 10);
        CHECK(d.delta_pp == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d.pre_total_pct == doctest::Approx(d.during_total_pct).epsilon(1e-12));
    }
    SUBCASE("a cross-correlation regime switch raises the total") {
        DgpSpec spec;
        spec.n = 3;
        spec.p = 1;
        spec.B = {MatrixXd::Zero(3, 3)};
        spec.sigma = MatrixXd::Identity(3, 3);
        spec.T = 800;
        spec.seed = 33;
        RegimeSwitch sw;
        sw.switch_time = 400;
        sw.B = {MatrixXd::Zero(3, 3)};
        MatrixXd post = MatrixXd::Constant(3, 3, 0.9);
        post.diagonal().setConstant(1.0);
        sw.sigma = post;
        spec.regime_switch = sw;
        const DeviationPanel panel = simulate(spec);

        EventWindowSpec ev;
        ev.name = "switch";
        ev.affected_asset = "A1";
        ev.calm_start = panel.diff_timestamps.front();
        ev.calm_end = panel.diff_timestamps[399];
        ev.crisis_start = panel.diff_timestamps[400];
        ev.crisis_end = panel.diff_timestamps.back();
        const auto d = event_spillover_delta(panel, ev, 1, 10);
        CHECK(d.delta_pp > 20.0);
    }
}
