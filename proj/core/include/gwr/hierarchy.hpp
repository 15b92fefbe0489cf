#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gwr/gwr_network.hpp"
#include "gwr/motion.hpp"
#include "gwr/params.hpp"
#include "gwr/predictive_gwr.hpp"

namespace gwr {

/// Layer parameters with edge-age limits 100/200/300 for GWR1/GWR2/P-GWR.
std::array<GwrParams, 3> default_layer_params();

struct HierarchyConfig {
    std::size_t frame_dim = kJointCount;
    std::size_t tau1 = 3;           // frames per GWR2 input
    std::size_t tau2 = 4;           // GWR2 outputs per P-GWR window: regression order + output_steps
    std::size_t output_steps = 1;   // > 1 selects vector prediction
    std::size_t prediction_horizon = 6;
    std::array<GwrParams, 3> layers = default_layer_params();

    std::size_t regression_order() const { return tau2 - output_steps; }
    /// Dimension of a GWR2 prototype, i.e. one element of the P-GWR series.
    std::size_t element_dim() const { return tau1 * frame_dim; }
    PredictiveLayout predictive_layout() const { return {regression_order(), element_dim(), output_steps}; }
    /// Frames consumed before the first P-GWR window is complete.
    std::size_t warmup_frames() const { return tau1 + tau2 - 1; }

    void validate() const;
    bool operator==(const HierarchyConfig&) const = default;
};

enum class Layer : std::size_t { Gwr1 = 0, Gwr2 = 1, Predictor = 2 };

/// Which layers learn during a pass; frozen layers only quantize.
struct LayerMask {
    bool gwr1 = true;
    bool gwr2 = true;
    bool predictor = true;

    static LayerMask predictor_only() { return {false, false, true}; }
    static LayerMask none() { return {false, false, false}; }
};

struct LayerTrainingStats {
    std::size_t neurons_before = 0;
    std::size_t neurons_after = 0;
    std::size_t steps = 0;
    std::size_t inserted = 0;
    std::size_t removed_neurons = 0;
    double mean_quantization_error = 0.0;
};

struct TrainingReport {
    std::array<LayerTrainingStats, 3> layers;
    // Squared one-step prediction error of the P-GWR on each training window,
    // measured before the update, averaged over windows and components.
    double predictor_online_mse = 0.0;
    std::vector<double> predictor_online_errors;  // per window, same measure
};

/// Per-step notification emitted while training.
struct StepTrace {
    Layer layer = Layer::Gwr1;
    std::size_t frame_index = 0;
    StepReport report;
    std::size_t neuron_count = 0;
};
using StepObserver = std::function<void(const StepTrace&)>;

struct ForecastPoint {
    std::size_t frame_index = 0;
    std::vector<double> current;                 // P-GWR element at frame_index
    std::vector<std::vector<double>> predicted;  // elements at frame_index + 1 ... + horizon
};

struct SequenceForecast {
    std::size_t horizon = 0;
    // GWR2 prototype reached at each frame, absent during warm-up.
    std::vector<std::optional<std::vector<double>>> elements;
    std::vector<ForecastPoint> points;
};

struct ErrorStats {
    double mse = 0.0;
    double mae = 0.0;
    double mae_std = 0.0;  // spread of the per-frame mean absolute error
    std::size_t frames = 0;
};

struct ForecastErrors {
    ErrorStats against_input;           // raw frames
    ErrorStats against_representation;  // frames as reconstructed by GWR1 -> GWR2
};

/// GWR1 -> GWR2 -> P-GWR. Raw frames are quantized by GWR1; windows of tau1
/// GWR1 prototypes feed GWR2; windows of tau2 GWR2 prototypes are split into
/// regressor and target for the P-GWR. Every layer is seeded by the first two
/// inputs it receives. Encoders restart at every sequence start and gap.
class Hierarchy {
public:
    explicit Hierarchy(HierarchyConfig config);

    const HierarchyConfig& config() const { return config_; }

    TrainingReport train_on_sequence(const FrameSeries& frames, std::size_t epochs, LayerMask mask = {},
                                     const StepObserver& observer = {});

    /// Trains only the P-GWR on windows already produced by encode_windows;
    /// equivalent to a predictor_only pass over the source sequences.
    TrainingReport train_predictor(std::span<const RegressorSample> windows, std::size_t epochs = 1,
                                   const StepObserver& observer = {});

    /// True once all three layers hold a network.
    bool trained() const { return gwr1_.net && gwr2_.net && predictor_.net; }
    bool lower_layers_trained() const { return gwr1_.net && gwr2_.net; }

    const GwrNetwork* gwr1() const { return gwr1_.net ? &*gwr1_.net : nullptr; }
    const GwrNetwork* gwr2() const { return gwr2_.net ? &*gwr2_.net : nullptr; }
    const PredictiveGwrNetwork* predictor() const { return predictor_.net ? &*predictor_.net : nullptr; }
    std::array<std::size_t, 3> neuron_counts() const;

    /// Drops the P-GWR so it can be relearned with new parameters on top of
    /// the current lower layers.
    void reset_predictor(const GwrParams& params);

    /// P-GWR training windows produced by the current, unmodified lower layers.
    std::vector<RegressorSample> encode_windows(const FrameSeries& frames) const;

    /// Quantizes the sequence and predicts `horizon` elements ahead from every
    /// frame whose regressor is complete. Requires trained().
    SequenceForecast forecast(const FrameSeries& frames, std::size_t horizon) const;

    /// First frame_dim components of an element: the newest frame it encodes.
    std::span<const double> frame_part(std::span<const double> element) const {
        return element.first(config_.frame_dim);
    }

    /// Versioned text snapshot (header "gwr-hierarchy 1").
    void save(std::ostream& out) const;
    static Hierarchy load(std::istream& in);

    bool operator==(const Hierarchy& other) const;

private:
    struct PredictorAccumulator;
    void feed_predictor(RegressorSample sample, std::size_t frame_index, PredictorAccumulator& acc,
                        const StepObserver& observer);

    template <typename Net, typename Input>
    struct LayerState {
        std::optional<Net> net;
        std::optional<Input> pending;  // first seed sample, waiting for the second
    };

    HierarchyConfig config_;
    LayerState<GwrNetwork, std::vector<double>> gwr1_;
    LayerState<GwrNetwork, std::vector<double>> gwr2_;
    LayerState<PredictiveGwrNetwork, RegressorSample> predictor_;
};

/// Errors of the step-th prediction (1-based) of every forecast point
/// against the input frames and against the hierarchy's own representation.
ForecastErrors score_forecast(const Hierarchy& hierarchy, const FrameSeries& frames,
                              const SequenceForecast& forecast, std::size_t step);

}  // namespace gwr
