#include "gwr/hierarchy.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "gwr/error.hpp"
#include "gwr/window_encoder.hpp"
#include "params_io.hpp"
#include "text_io.hpp"

namespace gwr {

std::array<GwrParams, 3> default_layer_params() {
    std::array<GwrParams, 3> layers{};
    layers[0].max_edge_age = 100;
    layers[1].max_edge_age = 200;
    layers[2].max_edge_age = 300;
    return layers;
}

void HierarchyConfig::validate() const {
    if (frame_dim < 1) throw ConfigError("frame_dim must be at least 1");
    if (tau1 < 1) throw ConfigError("tau1 must be at least 1");
    if (tau2 < 2) throw ConfigError("tau2 must be at least 2");
    if (output_steps < 1 || output_steps >= tau2) {
        throw ConfigError("output_steps must be in [1, tau2 - 1] so the regressor keeps at least one element");
    }
    if (prediction_horizon < 1) throw ConfigError("prediction_horizon must be at least 1");
    for (const auto& p : layers) p.validate();
}

Hierarchy::Hierarchy(HierarchyConfig config) : config_(std::move(config)) { config_.validate(); }

std::array<std::size_t, 3> Hierarchy::neuron_counts() const {
    return {gwr1_.net ? gwr1_.net->neuron_count() : 0, gwr2_.net ? gwr2_.net->neuron_count() : 0,
            predictor_.net ? predictor_.net->neuron_count() : 0};
}

void Hierarchy::reset_predictor(const GwrParams& params) {
    params.validate();
    config_.layers[2] = params;
    predictor_ = {};
}

namespace detail {

struct LayerAccumulator {
    LayerTrainingStats stats;
    double error_sum = 0.0;

    void record(const StepReport& r) {
        ++stats.steps;
        stats.inserted += r.inserted ? 1 : 0;
        stats.removed_neurons += r.removed_neurons;
        error_sum += r.bmu_distance;
    }
    void finish(std::size_t neurons_after) {
        stats.neurons_after = neurons_after;
        stats.mean_quantization_error = stats.steps ? error_sum / static_cast<double>(stats.steps) : 0.0;
    }
};

}  // namespace detail

using detail::LayerAccumulator;

namespace {

const char* layer_name(Layer layer) {
    switch (layer) {
        case Layer::Gwr1:
            return "GWR1";
        case Layer::Gwr2:
            return "GWR2";
        case Layer::Predictor:
            return "P-GWR";
    }
    return "?";
}

// Feeds one input to an unsupervised layer and returns its representation.
std::vector<double> feed_gwr(std::optional<GwrNetwork>& net, std::optional<std::vector<double>>& pending,
                             std::span<const double> x, bool learn, const GwrParams& params, Layer layer,
                             std::size_t frame_index, LayerAccumulator& acc, const StepObserver& observer) {
    if (!net) {
        if (!learn) throw StateError(std::string(layer_name(layer)) + " is not trained");
        if (!pending) {
            pending.emplace(x.begin(), x.end());
        } else {
            net = GwrNetwork::init(*pending, x, params);
            pending.reset();
        }
        // Seed inputs are represented by themselves.
        return {x.begin(), x.end()};
    }
    if (!learn) {
        const auto q = net->quantize(x);
        return {q.weight.begin(), q.weight.end()};
    }
    const StepReport report = net->train_step(x);
    acc.record(report);
    if (observer) observer({layer, frame_index, report, net->neuron_count()});
    const auto w = net->graph().row_by_id(report.bmu);
    return {w.begin(), w.end()};
}

}  // namespace

struct Hierarchy::PredictorAccumulator {
    LayerAccumulator& layer;
    double squared = 0.0;
    std::size_t terms = 0;
    std::vector<double> per_window;

    void finish(TrainingReport& report) {
        report.predictor_online_mse = terms ? squared / static_cast<double>(terms) : 0.0;
        report.predictor_online_errors = std::move(per_window);
    }
};

TrainingReport Hierarchy::train_on_sequence(const FrameSeries& frames, std::size_t epochs, LayerMask mask,
                                            const StepObserver& observer) {
    if (frames.dim != config_.frame_dim) {
        throw DimensionError("frames have " + std::to_string(frames.dim) + " components, expected " +
                             std::to_string(config_.frame_dim));
    }
    if (frames.size() < config_.warmup_frames()) {
        throw DomainError("sequence of " + std::to_string(frames.size()) + " frames is shorter than the " +
                          std::to_string(config_.warmup_frames()) + "-frame warm-up");
    }
    if (epochs < 1) throw DomainError("epochs must be at least 1");

    std::array<LayerAccumulator, 3> acc;
    const auto before = neuron_counts();
    for (std::size_t l = 0; l < 3; ++l) acc[l].stats.neurons_before = before[l];

    const PredictiveLayout layout = config_.predictive_layout();
    WindowEncoder window1(config_.tau1, config_.frame_dim);
    WindowEncoder window2(config_.tau2, config_.element_dim());
    PredictorAccumulator pacc{acc[2], 0.0, 0, {}};

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        window1.reset();
        window2.reset();
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (frames.has_gap_before(i)) {
                window1.reset();
                window2.reset();
            }
            const auto w1 = feed_gwr(gwr1_.net, gwr1_.pending, frames.frame(i), mask.gwr1, config_.layers[0],
                                     Layer::Gwr1, i, acc[0], observer);
            const auto o1 = window1.encode_step(w1);
            if (!o1) continue;
            const auto w2 = feed_gwr(gwr2_.net, gwr2_.pending, *o1, mask.gwr2, config_.layers[1], Layer::Gwr2, i,
                                     acc[1], observer);
            const auto o2 = window2.encode_step(w2);
            if (!o2) continue;

            if (!predictor_.net && !mask.predictor) throw StateError("P-GWR is not trained");
            if (mask.predictor) feed_predictor(split_window(*o2, layout), i, pacc, observer);
        }
    }

    TrainingReport report;
    const auto after = neuron_counts();
    for (std::size_t l = 0; l < 3; ++l) {
        acc[l].finish(after[l]);
        report.layers[l] = acc[l].stats;
    }
    pacc.finish(report);
    return report;
}

void Hierarchy::feed_predictor(RegressorSample sample, std::size_t frame_index, PredictorAccumulator& acc,
                               const StepObserver& observer) {
    if (!predictor_.net) {
        if (!predictor_.pending) {
            predictor_.pending = std::move(sample);
        } else {
            predictor_.net =
                PredictiveGwrNetwork::init(*predictor_.pending, sample, config_.predictive_layout(), config_.layers[2]);
            predictor_.pending.reset();
        }
        return;
    }
    const auto predicted = predictor_.net->predict_one(sample.input);
    double sq = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const double e = predicted[k] - sample.output[k];
        sq += e * e;
    }
    acc.squared += sq;
    acc.terms += predicted.size();
    acc.per_window.push_back(sq / static_cast<double>(predicted.size()));
    const StepReport report = predictor_.net->train_step(sample);
    acc.layer.record(report);
    if (observer) observer({Layer::Predictor, frame_index, report, predictor_.net->neuron_count()});
}

TrainingReport Hierarchy::train_predictor(std::span<const RegressorSample> windows, std::size_t epochs,
                                          const StepObserver& observer) {
    if (epochs < 1) throw DomainError("epochs must be at least 1");
    const PredictiveLayout layout = config_.predictive_layout();
    for (const auto& w : windows) {
        if (w.input.size() != layout.input_size() || w.output.size() != layout.output_size()) {
            throw DimensionError("training window does not match the P-GWR layout");
        }
    }
    LayerAccumulator acc;
    acc.stats.neurons_before = neuron_counts()[2];
    PredictorAccumulator pacc{acc, 0.0, 0, {}};
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = 0; i < windows.size(); ++i) feed_predictor(windows[i], i, pacc, observer);
    }
    TrainingReport report;
    acc.finish(neuron_counts()[2]);
    report.layers[2] = acc.stats;
    pacc.finish(report);
    return report;
}

namespace {

// Quantized element stream (GWR2 prototypes) of a sequence under frozen layers.
std::vector<std::optional<std::vector<double>>> encode_elements(const GwrNetwork& gwr1, const GwrNetwork& gwr2,
                                                                 const HierarchyConfig& config,
                                                                 const FrameSeries& frames) {
    if (frames.dim != config.frame_dim) {
        throw DimensionError("frames have " + std::to_string(frames.dim) + " components, expected " +
                             std::to_string(config.frame_dim));
    }
    std::vector<std::optional<std::vector<double>>> elements(frames.size());
    WindowEncoder window1(config.tau1, config.frame_dim);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames.has_gap_before(i)) window1.reset();
        const auto q1 = gwr1.quantize(frames.frame(i));
        const auto o1 = window1.encode_step(q1.weight);
        if (!o1) continue;
        const auto q2 = gwr2.quantize(*o1);
        elements[i].emplace(q2.weight.begin(), q2.weight.end());
    }
    return elements;
}

}  // namespace

std::vector<RegressorSample> Hierarchy::encode_windows(const FrameSeries& frames) const {
    if (!lower_layers_trained()) throw StateError("GWR1 and GWR2 must be trained before encoding");
    const auto elements = encode_elements(*gwr1_.net, *gwr2_.net, config_, frames);
    const PredictiveLayout layout = config_.predictive_layout();
    WindowEncoder window2(config_.tau2, config_.element_dim());
    std::vector<RegressorSample> windows;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames.has_gap_before(i)) window2.reset();
        if (!elements[i]) continue;
        if (const auto o2 = window2.encode_step(*elements[i])) windows.push_back(split_window(*o2, layout));
    }
    return windows;
}

SequenceForecast Hierarchy::forecast(const FrameSeries& frames, std::size_t horizon) const {
    if (!trained()) throw StateError("hierarchy is not trained");
    if (horizon < 1) throw DomainError("prediction horizon must be at least 1");
    const PredictiveLayout layout = config_.predictive_layout();
    if (layout.output_steps > 1 && horizon > layout.output_steps) {
        throw DomainError("vector-mode predictor covers at most " + std::to_string(layout.output_steps) + " steps");
    }
    SequenceForecast out;
    out.horizon = horizon;
    out.elements = encode_elements(*gwr1_.net, *gwr2_.net, config_, frames);
    WindowEncoder regressor(layout.regression_order, layout.element_dim);
    const std::size_t d = layout.element_dim;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames.has_gap_before(i)) regressor.reset();
        if (!out.elements[i]) continue;
        const auto x_in = regressor.encode_step(*out.elements[i]);
        if (!x_in) continue;
        ForecastPoint point;
        point.frame_index = i;
        point.current = *out.elements[i];
        if (layout.output_steps == 1) {
            point.predicted = predictor_.net->predict_recursive(*x_in, horizon);
        } else {
            const auto w_out = predictor_.net->predict_one(*x_in);
            for (std::size_t k = 0; k < horizon; ++k) point.predicted.emplace_back(w_out.begin() + k * d,
                                                                                  w_out.begin() + (k + 1) * d);
        }
        out.points.push_back(std::move(point));
    }
    return out;
}

namespace {

struct ErrorAccumulator {
    double squared = 0.0;
    double absolute = 0.0;
    std::vector<double> per_frame_mae;
    std::size_t components = 0;

    void add(std::span<const double> predicted, std::span<const double> truth) {
        double frame_abs = 0.0;
        for (std::size_t k = 0; k < predicted.size(); ++k) {
            const double e = predicted[k] - truth[k];
            squared += e * e;
            frame_abs += std::abs(e);
        }
        absolute += frame_abs;
        components += predicted.size();
        per_frame_mae.push_back(frame_abs / static_cast<double>(predicted.size()));
    }

    ErrorStats stats() const {
        ErrorStats s;
        s.frames = per_frame_mae.size();
        if (s.frames == 0) return s;
        s.mse = squared / static_cast<double>(components);
        s.mae = absolute / static_cast<double>(components);
        double var = 0.0;
        for (const double m : per_frame_mae) var += (m - s.mae) * (m - s.mae);
        s.mae_std = std::sqrt(var / static_cast<double>(s.frames));
        return s;
    }
};

}  // namespace

ForecastErrors score_forecast(const Hierarchy& hierarchy, const FrameSeries& frames,
                              const SequenceForecast& forecast, std::size_t step) {
    if (step < 1 || step > forecast.horizon) throw DomainError("forecast step outside the predicted horizon");
    ErrorAccumulator input;
    ErrorAccumulator representation;
    for (const auto& point : forecast.points) {
        const std::size_t target = point.frame_index + step;
        if (target >= frames.size()) break;
        bool crosses_gap = false;
        for (std::size_t j = point.frame_index + 1; j <= target; ++j) crosses_gap = crosses_gap || frames.has_gap_before(j);
        if (crosses_gap || !forecast.elements[target]) continue;
        const auto predicted = hierarchy.frame_part(point.predicted[step - 1]);
        input.add(predicted, frames.frame(target));
        representation.add(predicted, hierarchy.frame_part(*forecast.elements[target]));
    }
    return {input.stats(), representation.stats()};
}

void Hierarchy::save(std::ostream& out) const {
    out << "gwr-hierarchy 1\n";
    out << "config " << config_.frame_dim << ' ' << config_.tau1 << ' ' << config_.tau2 << ' '
        << config_.output_steps << ' ' << config_.prediction_horizon << '\n';
    for (const auto& p : config_.layers) detail::write_params(out, p);

    auto write_values = [&](std::span<const double> values) {
        for (const double v : values) out << ' ' << format_exact(v);
        out << '\n';
    };
    auto write_gwr = [&](const char* name, const LayerState<GwrNetwork, std::vector<double>>& layer) {
        out << "layer " << name << ' ';
        if (layer.net) {
            out << "network\n";
            layer.net->save(out);
        } else if (layer.pending) {
            out << "pending";
            write_values(*layer.pending);
        } else {
            out << "empty\n";
        }
    };
    write_gwr("gwr1", gwr1_);
    write_gwr("gwr2", gwr2_);
    out << "layer pgwr ";
    if (predictor_.net) {
        out << "network\n";
        predictor_.net->save(out);
    } else if (predictor_.pending) {
        out << "pending";
        std::vector<double> row(predictor_.pending->input);
        row.insert(row.end(), predictor_.pending->output.begin(), predictor_.pending->output.end());
        write_values(row);
    } else {
        out << "empty\n";
    }
    out << "end\n";
}

Hierarchy Hierarchy::load(std::istream& in) {
    detail::expect_token(in, "gwr-hierarchy");
    const std::size_t version = detail::read_count(in, "format version");
    if (version != 1) throw ParseError("unsupported gwr-hierarchy version " + std::to_string(version));
    detail::expect_token(in, "config");
    HierarchyConfig config;
    config.frame_dim = detail::read_count(in, "frame_dim");
    config.tau1 = detail::read_count(in, "tau1");
    config.tau2 = detail::read_count(in, "tau2");
    config.output_steps = detail::read_count(in, "output_steps");
    config.prediction_horizon = detail::read_count(in, "prediction_horizon");
    for (auto& p : config.layers) p = detail::read_params(in);
    std::optional<Hierarchy> loaded;
    try {
        loaded.emplace(config);
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    Hierarchy& h = *loaded;

    auto read_values = [&](std::size_t count) {
        std::vector<double> values(count);
        for (double& v : values) v = detail::read_double(in, "pending sample");
        return values;
    };
    auto read_gwr = [&](const char* name, LayerState<GwrNetwork, std::vector<double>>& layer, std::size_t dim) {
        detail::expect_token(in, "layer");
        detail::expect_token(in, name);
        const std::string kind = detail::next_token(in, "layer kind");
        if (kind == "network") {
            layer.net = GwrNetwork::load(in);
            if (layer.net->input_dim() != dim) throw ParseError(std::string(name) + " dimension mismatch");
        } else if (kind == "pending") {
            layer.pending = read_values(dim);
        } else if (kind != "empty") {
            throw ParseError("unknown layer kind '" + kind + "'");
        }
    };
    read_gwr("gwr1", h.gwr1_, config.frame_dim);
    read_gwr("gwr2", h.gwr2_, config.element_dim());
    detail::expect_token(in, "layer");
    detail::expect_token(in, "pgwr");
    const std::string kind = detail::next_token(in, "layer kind");
    const PredictiveLayout layout = config.predictive_layout();
    if (kind == "network") {
        h.predictor_.net = PredictiveGwrNetwork::load(in);
        if (!(h.predictor_.net->layout() == layout)) throw ParseError("P-GWR layout does not match config");
    } else if (kind == "pending") {
        const auto row = read_values(layout.window_size());
        RegressorSample s;
        s.input.assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(layout.input_size()));
        s.output.assign(row.begin() + static_cast<std::ptrdiff_t>(layout.input_size()), row.end());
        h.predictor_.pending = std::move(s);
    } else if (kind != "empty") {
        throw ParseError("unknown layer kind '" + kind + "'");
    }
    detail::expect_token(in, "end");
    return std::move(*loaded);
}

bool Hierarchy::operator==(const Hierarchy& other) const {
    auto same_sample = [](const std::optional<RegressorSample>& a, const std::optional<RegressorSample>& b) {
        if (a.has_value() != b.has_value()) return false;
        return !a || (a->input == b->input && a->output == b->output);
    };
    return config_ == other.config_ && gwr1_.net == other.gwr1_.net && gwr2_.net == other.gwr2_.net &&
           predictor_.net == other.predictor_.net && gwr1_.pending == other.gwr1_.pending && gwr2_.pending == other.gwr2_.pending &&
           same_sample(predictor_.pending, other.predictor_.pending);
}

}  // namespace gwr
