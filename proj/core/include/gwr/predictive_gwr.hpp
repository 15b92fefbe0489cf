#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "gwr/params.hpp"
#include "gwr/prototype_graph.hpp"

namespace gwr {

/// Shape of the regressor/target mapping learned by a predictive network.
struct PredictiveLayout {
    std::size_t regression_order = 3;  // p: past elements in the regressor
    std::size_t element_dim = 1;       // d
    std::size_t output_steps = 1;      // future elements per target; > 1 is vector mode

    std::size_t input_size() const { return regression_order * element_dim; }
    std::size_t output_size() const { return output_steps * element_dim; }
    std::size_t window_size() const { return (regression_order + output_steps) * element_dim; }
    void validate() const;

    bool operator==(const PredictiveLayout&) const = default;
};

/// x_in: p elements newest-first, x(t) ... x(t-p+1).
/// x_out: output_steps elements in forward time order, x(t+1) ... x(t+h).
struct RegressorSample {
    std::vector<double> input;
    std::vector<double> output;
};

/// Splits a newest-first window over p + output_steps elements.
RegressorSample split_window(std::span<const double> window, const PredictiveLayout& layout);

struct PredictionError {
    double mse = 0.0;
    double mae = 0.0;
};

/// GWR whose neurons carry paired regressor (w_in) and target (w_out)
/// weights. Matching and activity use w_in only; adaptation moves both
/// vectors of a neuron by the same epsilon * firing factor.
class PredictiveGwrNetwork {
public:
    static PredictiveGwrNetwork init(const RegressorSample& first, const RegressorSample& second,
                                     const PredictiveLayout& layout, const GwrParams& params);

    const PredictiveLayout& layout() const { return layout_; }
    const GwrParams& params() const { return graph_.params(); }
    std::size_t neuron_count() const { return graph_.neuron_count(); }
    std::size_t edge_count() const { return graph_.edge_count(); }
    const PrototypeGraph& graph() const { return graph_; }
    PrototypeGraph& mutable_graph() { return graph_; }

    std::span<const double> input_weight(NeuronId id) const;
    std::span<const double> output_weight(NeuronId id) const;

    BmuPair find_bmus(std::span<const double> regressor) const;
    StepReport train_step(const RegressorSample& sample);

    /// w_out of the regressor's best-matching unit.
    std::span<const double> predict_one(std::span<const double> regressor) const;

    /// Feeds each one-step prediction back into the regressor; returns the
    /// predictions for t+1 ... t+horizon. Only valid with output_steps == 1.
    std::vector<std::vector<double>> predict_recursive(std::span<const double> regressor,
                                                       std::size_t horizon) const;

    PredictionError prediction_error(std::span<const RegressorSample> samples) const;

    /// Versioned text snapshot (header "pgwr-network 1").
    void save(std::ostream& out) const;
    static PredictiveGwrNetwork load(std::istream& in);

    bool operator==(const PredictiveGwrNetwork&) const = default;

private:
    PredictiveGwrNetwork(PrototypeGraph graph, PredictiveLayout layout)
        : graph_(std::move(graph)), layout_(layout) {}

    void check_regressor(std::span<const double> regressor) const;

    PrototypeGraph graph_;
    PredictiveLayout layout_;
};

}  // namespace gwr
