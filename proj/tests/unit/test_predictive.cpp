#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gwr/error.hpp"
#include "gwr/predictive_gwr.hpp"
#include "gwr/window_encoder.hpp"

#include "cycle.hpp"

using gwr::testing::CycleResult;
using gwr::testing::learn_cycle;

using namespace gwr;

TEST_CASE("layout sizes") {
    PredictiveLayout l{3, 24, 1};
    CHECK(l.input_size() == 72);
    CHECK(l.output_size() == 24);
    CHECK(l.window_size() == 96);
    PredictiveLayout v{2, 5, 3};
    CHECK(v.output_size() == 15);
    CHECK_THROWS_AS((PredictiveLayout{0, 1, 1}.validate()), ConfigError);
    CHECK_THROWS_AS((PredictiveLayout{1, 0, 1}.validate()), ConfigError);
    CHECK_THROWS_AS((PredictiveLayout{1, 1, 0}.validate()), ConfigError);
}

TEST_CASE("split_window: newest-first window to regressor and forward-ordered target") {
    // Elements are 2-d: element t is {t, 10 t}. Window newest first: t = 4 .. 0.
    std::vector<double> window;
    for (int t = 4; t >= 0; --t) {
        window.push_back(t);
        window.push_back(10 * t);
    }
    SUBCASE("one step") {
        const auto s = split_window(window, {4, 2, 1});
        CHECK(s.output == std::vector<double>{4, 40});
        CHECK(s.input == std::vector<double>{3, 30, 2, 20, 1, 10, 0, 0});
    }
    SUBCASE("vector mode keeps forward time order") {
        const auto s = split_window(window, {3, 2, 2});
        CHECK(s.output == std::vector<double>{3, 30, 4, 40});
        CHECK(s.input == std::vector<double>{2, 20, 1, 10, 0, 0});
    }
    CHECK_THROWS_AS(split_window(window, {3, 2, 1}), DimensionError);
}

TEST_CASE("window encoder: emits newest-first concatenation once full") {
    WindowEncoder enc(3, 2);
    CHECK(enc.output_dim() == 6);
    CHECK_FALSE(enc.encode_step(std::vector<double>{1, 1}));
    CHECK_FALSE(enc.encode_step(std::vector<double>{2, 2}));
    const auto o = enc.encode_step(std::vector<double>{3, 3});
    REQUIRE(o);
    CHECK(*o == std::vector<double>{3, 3, 2, 2, 1, 1});
    const auto o2 = enc.encode_step(std::vector<double>{4, 4});
    REQUIRE(o2);
    CHECK(*o2 == std::vector<double>{4, 4, 3, 3, 2, 2});
    enc.reset();
    CHECK(enc.buffered() == 0);
    CHECK_FALSE(enc.encode_step(std::vector<double>{5, 5}));
    CHECK_THROWS_AS(enc.encode_step(std::vector<double>{1}), DimensionError);
    CHECK_THROWS_AS(WindowEncoder(0, 1), ConfigError);
}

TEST_CASE("predictive network: matching uses w_in only, prediction is w_out") {
    const PredictiveLayout l{2, 1, 1};
    auto net = PredictiveGwrNetwork::init({{0, 0}, {100}}, {{1, 1}, {-100}}, l, GwrParams{});
    // w_out differs wildly but does not influence matching.
    CHECK(net.find_bmus(std::vector<double>{0.1, 0.1}).best == 0);
    CHECK(net.predict_one(std::vector<double>{0.1, 0.1})[0] == 100);
    CHECK(net.predict_one(std::vector<double>{0.9, 0.8})[0] == -100);
    CHECK_THROWS_AS(net.predict_one(std::vector<double>{0.1}), DimensionError);
    CHECK_THROWS_AS(PredictiveGwrNetwork::init({{0}, {1}}, {{1, 1}, {2}}, l, GwrParams{}), DimensionError);
}

TEST_CASE("predictive network: adaptation moves w_in and w_out by the same factor") {
    const PredictiveLayout l{1, 1, 1};
    auto net = PredictiveGwrNetwork::init({{0}, {0}}, {{10}, {10}}, l, GwrParams{});
    net.train_step({{1}, {3}});
    // BMU 0 with firing 1: both halves move by eps_b = 0.1.
    CHECK(net.input_weight(0)[0] == doctest::Approx(0.1));
    CHECK(net.output_weight(0)[0] == doctest::Approx(0.3));
    // Neighbour 1 moves by eps_n = 0.01 on both halves.
    CHECK(net.input_weight(1)[0] == doctest::Approx(10 + 0.01 * (1 - 10)));
    CHECK(net.output_weight(1)[0] == doctest::Approx(10 + 0.01 * (3 - 10)));
}

TEST_CASE("predictive network: recursive prediction shifts the regressor") {
    // Hand-made network for the 3-cycle 1 -> 2 -> 3 -> 1; regressor (x_t, x_{t-1}).
    const PredictiveLayout l{2, 1, 1};
    auto three = PredictiveGwrNetwork::init({{2, 1}, {3}}, {{3, 2}, {1}}, l, GwrParams{});
    GwrParams grow;
    grow.firing_threshold = 0.95;
    grow.activation_threshold = 0.999999;
    three.mutable_graph().set_params(grow);
    three.train_step({{2, 1}, {3}});  // habituates both neurons
    three.train_step({{1, 3}, {2}});
    REQUIRE(three.neuron_count() == 3);
    // Put every neuron exactly on its mapping.
    const std::vector<std::vector<double>> rows = {{2, 1, 3}, {3, 2, 1}, {1, 3, 2}};
    for (std::size_t i = 0; i < 3; ++i) {
        auto row = three.mutable_graph().mutable_row(i);
        std::copy(rows[i].begin(), rows[i].end(), row.begin());
    }

    const auto p = three.predict_recursive(std::vector<double>{2, 1}, 7);
    const std::vector<double> expect = {3, 1, 2, 3, 1, 2, 3};
    REQUIRE(p.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(p[i][0] == expect[i]);

    CHECK_THROWS_AS(three.predict_recursive(std::vector<double>{2, 1}, 0), DomainError);
    auto vector_net = PredictiveGwrNetwork::init({{0}, {1, 2}}, {{1}, {2, 3}}, {1, 1, 2}, GwrParams{});
    CHECK_THROWS_AS(vector_net.predict_recursive(std::vector<double>{0}, 2), StateError);
}

TEST_CASE("predictive network: exact cycles are learned to numerical precision") {
    for (const std::size_t period : {4u, 7u}) {
        CAPTURE(period);
        const CycleResult r = learn_cycle(period, 3, 8);
        CHECK(r.one_step_mse < 1e-6);
        CHECK(r.recursive_mse < 1e-6);
    }
}

TEST_CASE("predictive network: vector mode predicts all steps at once") {
    const PredictiveLayout l{2, 1, 3};
    const std::vector<double> cycle = {0.0, 0.8, -0.5, 0.3};
    auto value = [&](std::size_t t) { return cycle[t % cycle.size()]; };
    auto window_at = [&](std::size_t t) {
        // Newest first over t+3 .. t-1 (3 outputs + 2 inputs).
        std::vector<double> w;
        for (std::size_t k = 0; k < 5; ++k) w.push_back(value(t + 4 - k));
        return split_window(w, l);
    };
    auto net = PredictiveGwrNetwork::init(window_at(0), window_at(1), l, GwrParams{});
    for (int epoch = 0; epoch < 3000; ++epoch) {
        for (std::size_t t = 0; t < 4; ++t) net.train_step(window_at(t));
    }
    for (std::size_t t = 0; t < 4; ++t) {
        const auto s = window_at(t);
        const auto out = net.predict_one(s.input);
        REQUIRE(out.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) CHECK(out[k] == doctest::Approx(s.output[k]).epsilon(1e-3));
    }
}

TEST_CASE("predictive network: prediction_error and snapshot round trip") {
    const PredictiveLayout l{2, 2, 1};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    auto sample = [&] {
        RegressorSample s;
        for (int i = 0; i < 4; ++i) s.input.push_back(n(rng));
        for (int i = 0; i < 2; ++i) s.output.push_back(n(rng));
        return s;
    };
    auto net = PredictiveGwrNetwork::init(sample(), sample(), l, GwrParams{});
    std::vector<RegressorSample> data;
    for (int i = 0; i < 200; ++i) data.push_back(sample());
    for (const auto& s : data) net.train_step(s);

    // Oracle for the error definition.
    double sq = 0, ab = 0;
    for (const auto& s : data) {
        const auto p = net.predict_one(s.input);
        for (std::size_t k = 0; k < 2; ++k) {
            sq += (p[k] - s.output[k]) * (p[k] - s.output[k]);
            ab += std::abs(p[k] - s.output[k]);
        }
    }
    const auto e = net.prediction_error(data);
    CHECK(e.mse == doctest::Approx(sq / 400));
    CHECK(e.mae == doctest::Approx(ab / 400));
    CHECK_THROWS_AS(net.prediction_error(std::vector<RegressorSample>{}), DomainError);

    std::stringstream ss;
    net.save(ss);
    CHECK(PredictiveGwrNetwork::load(ss) == net);
    std::stringstream bad("pgwr-network 1\nlayout 0 1 1\n");
    CHECK_THROWS_AS(PredictiveGwrNetwork::load(bad), ParseError);
}
