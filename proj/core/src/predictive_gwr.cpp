#include "gwr/predictive_gwr.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "gwr/error.hpp"
#include "params_io.hpp"
#include "text_io.hpp"

namespace gwr {

void PredictiveLayout::validate() const {
    if (regression_order < 1) throw ConfigError("regression order must be at least 1");
    if (element_dim < 1) throw ConfigError("element dimension must be at least 1");
    if (output_steps < 1) throw ConfigError("output steps must be at least 1");
}

RegressorSample split_window(std::span<const double> window, const PredictiveLayout& layout) {
    layout.validate();
    if (window.size() != layout.window_size()) {
        throw DimensionError("window has " + std::to_string(window.size()) + " elements, expected " +
                             std::to_string(layout.window_size()));
    }
    const std::size_t d = layout.element_dim;
    RegressorSample sample;
    sample.output.reserve(layout.output_size());
    // Newest-first block j holds x(t + output_steps - j).
    for (std::size_t step = 0; step < layout.output_steps; ++step) {
        const std::size_t block = layout.output_steps - 1 - step;
        sample.output.insert(sample.output.end(), window.begin() + static_cast<std::ptrdiff_t>(block * d),
                             window.begin() + static_cast<std::ptrdiff_t>((block + 1) * d));
    }
    sample.input.assign(window.begin() + static_cast<std::ptrdiff_t>(layout.output_size()), window.end());
    return sample;
}

namespace {

std::vector<double> joined(const RegressorSample& s) {
    std::vector<double> row(s.input);
    row.insert(row.end(), s.output.begin(), s.output.end());
    return row;
}

void check_sample(const RegressorSample& s, const PredictiveLayout& layout) {
    if (s.input.size() != layout.input_size() || s.output.size() != layout.output_size()) {
        throw DimensionError("regressor sample shape (" + std::to_string(s.input.size()) + ", " +
                             std::to_string(s.output.size()) + ") does not match layout (" +
                             std::to_string(layout.input_size()) + ", " + std::to_string(layout.output_size()) +
                             ")");
    }
}

}  // namespace

PredictiveGwrNetwork PredictiveGwrNetwork::init(const RegressorSample& first, const RegressorSample& second,
                                                const PredictiveLayout& layout, const GwrParams& params) {
    layout.validate();
    check_sample(first, layout);
    check_sample(second, layout);
    PrototypeGraph graph(layout.window_size(), layout.input_size(), params);
    graph.seed(joined(first), joined(second));
    return PredictiveGwrNetwork(std::move(graph), layout);
}

std::span<const double> PredictiveGwrNetwork::input_weight(NeuronId id) const {
    return graph_.row_by_id(id).first(layout_.input_size());
}

std::span<const double> PredictiveGwrNetwork::output_weight(NeuronId id) const {
    return graph_.row_by_id(id).subspan(layout_.input_size());
}

void PredictiveGwrNetwork::check_regressor(std::span<const double> regressor) const {
    if (regressor.size() != layout_.input_size()) {
        throw DimensionError("regressor has " + std::to_string(regressor.size()) + " elements, expected " +
                             std::to_string(layout_.input_size()));
    }
    require_finite(regressor, "regressor");
}

BmuPair PredictiveGwrNetwork::find_bmus(std::span<const double> regressor) const {
    check_regressor(regressor);
    return graph_.find_bmus(regressor);
}

StepReport PredictiveGwrNetwork::train_step(const RegressorSample& sample) {
    check_sample(sample, layout_);
    return graph_.train_step(joined(sample));
}

std::span<const double> PredictiveGwrNetwork::predict_one(std::span<const double> regressor) const {
    check_regressor(regressor);
    return output_weight(graph_.find_best(regressor).id);
}

std::vector<std::vector<double>> PredictiveGwrNetwork::predict_recursive(std::span<const double> regressor,
                                                                         std::size_t horizon) const {
    if (layout_.output_steps != 1) throw StateError("recursive prediction requires a one-step network");
    if (horizon < 1) throw DomainError("prediction horizon must be at least 1");
    check_regressor(regressor);
    const std::size_t d = layout_.element_dim;
    std::vector<double> current(regressor.begin(), regressor.end());
    std::vector<std::vector<double>> out;
    out.reserve(horizon);
    for (std::size_t step = 0; step < horizon; ++step) {
        const auto next = predict_one(current);
        out.emplace_back(next.begin(), next.end());
        // Drop the oldest block and put the prediction in front.
        std::copy_backward(current.begin(), current.end() - static_cast<std::ptrdiff_t>(d), current.end());
        std::copy(next.begin(), next.end(), current.begin());
    }
    return out;
}

PredictionError PredictiveGwrNetwork::prediction_error(std::span<const RegressorSample> samples) const {
    if (samples.empty()) throw DomainError("prediction error needs at least one sample");
    double squared = 0.0;
    double absolute = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        check_sample(s, layout_);
        const auto predicted = predict_one(s.input);
        for (std::size_t k = 0; k < predicted.size(); ++k) {
            const double e = predicted[k] - s.output[k];
            squared += e * e;
            absolute += std::abs(e);
        }
        count += predicted.size();
    }
    return {squared / static_cast<double>(count), absolute / static_cast<double>(count)};
}

void PredictiveGwrNetwork::save(std::ostream& out) const {
    out << "pgwr-network 1\n";
    out << "layout " << layout_.regression_order << ' ' << layout_.element_dim << ' ' << layout_.output_steps
        << '\n';
    detail::write_params(out, params());
    graph_.write(out);
    out << "end\n";
}

PredictiveGwrNetwork PredictiveGwrNetwork::load(std::istream& in) {
    detail::expect_token(in, "pgwr-network");
    const std::size_t version = detail::read_count(in, "format version");
    if (version != 1) throw ParseError("unsupported pgwr-network version " + std::to_string(version));
    detail::expect_token(in, "layout");
    PredictiveLayout layout;
    layout.regression_order = detail::read_count(in, "regression order");
    layout.element_dim = detail::read_count(in, "element dim");
    layout.output_steps = detail::read_count(in, "output steps");
    try {
        layout.validate();
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    const GwrParams params = detail::read_params(in);
    PrototypeGraph graph = PrototypeGraph::read(in, layout.window_size(), layout.input_size(), params);
    detail::expect_token(in, "end");
    return PredictiveGwrNetwork(std::move(graph), layout);
}

}  // namespace gwr
