#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "gwr/params.hpp"
#include "gwr/prototype_graph.hpp"

namespace gwr {

struct QuantizeResult {
    NeuronId bmu = 0;
    std::span<const double> weight;  // valid until the network is next mutated
    double activity = 0.0;
};

struct EpochReport {
    double mean_quantization_error = 0.0;
    std::size_t neuron_count = 0;
    std::size_t inserted = 0;
    std::size_t removed_neurons = 0;
    std::size_t removed_edges = 0;
};

/// Growing When Required network: unsupervised prototypes that grow where
/// the input is poorly represented by a well-trained best-matching unit.
class GwrNetwork {
public:
    /// Seeds the network with the first two input samples.
    static GwrNetwork init(std::span<const double> first_sample, std::span<const double> second_sample,
                           const GwrParams& params);

    std::size_t input_dim() const { return graph_.row_width(); }
    const GwrParams& params() const { return graph_.params(); }
    void set_params(const GwrParams& params) { graph_.set_params(params); }
    std::size_t neuron_count() const { return graph_.neuron_count(); }
    std::size_t edge_count() const { return graph_.edge_count(); }
    std::uint64_t train_step_counter() const { return graph_.step_count(); }
    const PrototypeGraph& graph() const { return graph_; }
    PrototypeGraph& mutable_graph() { return graph_; }

    BmuPair find_bmus(std::span<const double> x) const;
    QuantizeResult quantize(std::span<const double> x) const;
    StepReport train_step(std::span<const double> x) { return graph_.train_step(x); }

    /// Applies train_step to each sample in order.
    EpochReport train_epoch(std::span<const std::vector<double>> samples);

    /// Versioned text snapshot (header "gwr-network 1").
    void save(std::ostream& out) const;
    static GwrNetwork load(std::istream& in);

    bool operator==(const GwrNetwork&) const = default;

private:
    explicit GwrNetwork(PrototypeGraph graph) : graph_(std::move(graph)) {}

    PrototypeGraph graph_;
};

}  // namespace gwr
