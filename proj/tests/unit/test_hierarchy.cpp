#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gwr/delay.hpp"
#include "gwr/error.hpp"
#include "gwr/hierarchy.hpp"
#include "gwr/synthetic.hpp"

using namespace gwr;

namespace {

FrameSeries wave(std::uint64_t seed, double seconds = 10.0) {
    return FrameSeries::from(generate_synthetic({PatternShape::Wave, ArmSide::Both}, 0.0, 0.002, seconds, seed));
}

Hierarchy trained_hierarchy() {
    Hierarchy h{HierarchyConfig{}};
    h.train_on_sequence(wave(1), 5);
    REQUIRE(h.trained());
    return h;
}

}  // namespace

TEST_CASE("hierarchy config: derived sizes and validation") {
    HierarchyConfig c;
    CHECK(c.regression_order() == 3);
    CHECK(c.element_dim() == 24);
    CHECK(c.warmup_frames() == 6);
    CHECK(c.predictive_layout() == PredictiveLayout{3, 24, 1});
    const auto layers = default_layer_params();
    CHECK(layers[0].max_edge_age == 100);
    CHECK(layers[1].max_edge_age == 200);
    CHECK(layers[2].max_edge_age == 300);

    HierarchyConfig bad = c;
    bad.output_steps = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.tau1 = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("hierarchy: layers appear as their inputs arrive") {
    Hierarchy h{HierarchyConfig{}};
    CHECK_FALSE(h.trained());
    CHECK_THROWS_AS(h.forecast(wave(1), 1), StateError);
    // Two frames seed GWR1; GWR2 needs tau1 + 1 frames; the P-GWR needs two full windows.
    FrameSeries s = wave(1);
    FrameSeries head{s.dim, {s.values.begin(), s.values.begin() + 6 * 8}, {}};
    h.train_on_sequence(head, 1);
    CHECK(h.lower_layers_trained());
    CHECK_FALSE(h.trained());
    FrameSeries more{s.dim, {s.values.begin(), s.values.begin() + 7 * 8}, {}};
    h.train_on_sequence(more, 1);
    CHECK(h.trained());

    FrameSeries wrong{3, std::vector<double>(30, 0.0), {}};
    CHECK_THROWS_AS(h.train_on_sequence(wrong, 1), DimensionError);
}

TEST_CASE("hierarchy: forecast points start once the regressor is complete") {
    const Hierarchy h = trained_hierarchy();
    const FrameSeries s = wave(2);
    const auto f = h.forecast(s, 6);
    const std::size_t n = s.size();
    CHECK_FALSE(f.elements[0]);
    CHECK_FALSE(f.elements[1]);
    CHECK(f.elements[2]);
    // Regressor of p = 3 elements is complete at frame (tau1 - 1) + (p - 1) = 4.
    REQUIRE(f.points.size() == n - 4);
    CHECK(f.points.front().frame_index == 4);
    for (const auto& p : f.points) {
        REQUIRE(p.predicted.size() == 6);
        CHECK(p.predicted[0].size() == 24);
    }
    // Scoring step k uses every point whose target lies inside the sequence.
    CHECK(score_forecast(h, s, f, 1).against_input.frames == n - 5);
    CHECK(score_forecast(h, s, f, 6).against_input.frames == n - 10);
    CHECK_THROWS_AS(score_forecast(h, s, f, 7), DomainError);
}

TEST_CASE("hierarchy: encoders restart after a gap") {
    const Hierarchy h = trained_hierarchy();
    FrameSeries s = wave(2);
    const std::size_t n = s.size();
    s.gap_before.assign(n, 0);
    s.gap_before[40] = 1;
    const auto f = h.forecast(s, 2);
    CHECK(f.elements[39]);
    CHECK_FALSE(f.elements[40]);
    CHECK_FALSE(f.elements[41]);
    CHECK(f.elements[42]);
    // Points 4..39 and 44..n-1.
    CHECK(f.points.size() == (40 - 4) + (n - 44));
    // Step 2 skips points 38 and 39 (target across the gap) and n-2, n-1 (past the end).
    CHECK(score_forecast(h, s, f, 2).against_input.frames == f.points.size() - 4);
}

TEST_CASE("hierarchy: frozen layers do not change") {
    Hierarchy h = trained_hierarchy();
    const GwrNetwork g1 = *h.gwr1();
    const GwrNetwork g2 = *h.gwr2();
    const PredictiveGwrNetwork p = *h.predictor();
    h.train_on_sequence(wave(3), 1, LayerMask::predictor_only());
    CHECK(*h.gwr1() == g1);
    CHECK(*h.gwr2() == g2);
    CHECK_FALSE(*h.predictor() == p);
    const Hierarchy before = h;
    h.train_on_sequence(wave(4), 1, LayerMask::none());
    CHECK(h == before);
}

TEST_CASE("hierarchy: train_predictor matches a predictor-only pass") {
    Hierarchy a = trained_hierarchy();
    Hierarchy b = a;
    const FrameSeries s = wave(5);
    const auto ra = a.train_on_sequence(s, 2, LayerMask::predictor_only());
    const auto windows = b.encode_windows(s);
    CHECK(windows.size() == s.size() - 5);
    const auto rb = b.train_predictor(windows, 2);
    CHECK(a == b);
    CHECK(ra.predictor_online_mse == rb.predictor_online_mse);
    CHECK(ra.predictor_online_errors == rb.predictor_online_errors);
}

TEST_CASE("hierarchy: reset_predictor relearns from the next windows") {
    Hierarchy h = trained_hierarchy();
    GwrParams p = h.config().layers[2];
    p.activation_threshold = 0.5;
    h.reset_predictor(p);
    CHECK(h.lower_layers_trained());
    CHECK_FALSE(h.trained());
    h.train_predictor(h.encode_windows(wave(6)), 1);
    REQUIRE(h.trained());
    CHECK(h.predictor()->params().activation_threshold == 0.5);
}

TEST_CASE("hierarchy: snapshot round trip preserves behaviour") {
    const Hierarchy h = trained_hierarchy();
    std::stringstream ss;
    h.save(ss);
    const Hierarchy back = Hierarchy::load(ss);
    CHECK(back == h);
    const FrameSeries s = wave(7);
    const auto fa = h.forecast(s, 3);
    const auto fb = back.forecast(s, 3);
    REQUIRE(fa.points.size() == fb.points.size());
    for (std::size_t i = 0; i < fa.points.size(); ++i) CHECK(fa.points[i].predicted == fb.points[i].predicted);

    // A partially seeded hierarchy round-trips too.
    Hierarchy partial{HierarchyConfig{}};
    FrameSeries head{8, {s.values.begin(), s.values.begin() + 6 * 8}, {}};
    partial.train_on_sequence(head, 1);
    CHECK_FALSE(partial.trained());
    std::stringstream ps;
    partial.save(ps);
    CHECK(Hierarchy::load(ps) == partial);

    std::stringstream bad("gwr-hierarchy 2\n");
    CHECK_THROWS_AS(Hierarchy::load(bad), ParseError);
}

TEST_CASE("delay model: look-ahead in frames") {
    CHECK(DelayModel{600, 0, 100}.horizon_frames() == 6);
    CHECK(DelayModel{400, 200, 100}.horizon_frames() == 6);
    CHECK(DelayModel{450, 0, 100}.horizon_frames() == 5);
    CHECK(DelayModel{0, 0, 100}.horizon_frames() == 0);
    CHECK_THROWS_AS((DelayModel{-1, 0, 100}.validate()), ConfigError);
    CHECK_THROWS_AS((DelayModel{1, -1, 100}.validate()), ConfigError);
    CHECK_THROWS_AS((DelayModel{1, 0, 0}.validate()), ConfigError);
}

TEST_CASE("select_command: nearest buffered prediction, ties to the smallest index") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 2000; ++trial) {
        PredictionBuffer b;
        const std::size_t len = 1 + trial % 9;
        for (std::size_t i = 0; i < len; ++i) {
            std::vector<double> p(8);
            for (auto& v : p) v = n(rng);
            b.predictions.push_back(p);
        }
        std::vector<double> q(8);
        for (auto& v : q) v = n(rng);
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t i = 0; i < len; ++i) {
            double d = 0;
            for (std::size_t k = 0; k < 8; ++k) d += (q[k] - b.predictions[i][k]) * (q[k] - b.predictions[i][k]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const auto c = select_command(q, b);
        CHECK(c.index == best);
        CHECK(c.command == b.predictions[best]);
    }
    PredictionBuffer tie{0, {{1.0}, {3.0}, {1.0}}};
    CHECK(select_command(std::vector<double>{2.0}, tie).index == 0);
    CHECK_THROWS_AS(select_command(std::vector<double>{2.0}, PredictionBuffer{}), DomainError);
    CHECK_THROWS_AS(select_command(std::vector<double>{2.0, 1.0}, tie), DimensionError);
}

TEST_CASE("delay pipeline: rows, pass-through and jitter-free variable mode") {
    const Hierarchy h = trained_hierarchy();
    const FrameSeries s = wave(9);
    const std::size_t n = s.size();

    const auto fixed = run_pipeline(h, s, {600, 0, 100}, DelayMode::Fixed, 1);
    // Points from frame 4; a command is scored only if frame + 6 exists.
    CHECK(fixed.rows.size() == n - 10);
    for (const auto& r : fixed.rows) CHECK(r.chosen_index == 6);

    const auto zero = run_pipeline(h, s, {0, 0, 100}, DelayMode::Fixed, 1);
    CHECK(zero.rows.size() == n - 4);
    for (const auto& r : zero.rows) {
        CHECK(r.chosen_index == 0);
        CHECK(r.abs_error == r.baseline_abs_error);
    }
    CHECK(zero.mae == zero.baseline_mae);

    const auto variable = run_pipeline(h, s, {600, 0, 100}, DelayMode::Variable, 1);
    REQUIRE(variable.rows.size() == fixed.rows.size());
    for (std::size_t i = 0; i < fixed.rows.size(); ++i) CHECK(variable.rows[i].command == fixed.rows[i].command);
    CHECK(variable.mae == fixed.mae);

    const auto jittered = run_pipeline(h, s, {400, 200, 100}, DelayMode::Variable, 3);
    CHECK_FALSE(jittered.rows.empty());
    for (const auto& r : jittered.rows) CHECK(r.chosen_index <= 6);
    const auto again = run_pipeline(h, s, {400, 200, 100}, DelayMode::Variable, 3);
    CHECK(again.mae == jittered.mae);

    std::ostringstream csv;
    write_lag_csv(csv, fixed);
    const std::string text = csv.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "frame_index,chosen_index,command_0,command_1,command_2,command_3,command_4,command_5,command_6,command_7,"
          "truth_0,truth_1,truth_2,truth_3,truth_4,truth_5,truth_6,truth_7,abs_error");
    std::size_t lines = 0;
    for (const char c : text) lines += c == '\n';
    CHECK(lines == fixed.rows.size() + 1);

    CHECK_THROWS_AS(run_pipeline(Hierarchy{HierarchyConfig{}}, s, {600, 0, 100}, DelayMode::Fixed, 1), StateError);
    FrameSeries tiny{8, {s.values.begin(), s.values.begin() + 8 * 8}, {}};
    CHECK_THROWS_AS(run_pipeline(h, tiny, {600, 0, 100}, DelayMode::Fixed, 1), DomainError);
}
