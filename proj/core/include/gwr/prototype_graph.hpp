#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gwr/params.hpp"

namespace gwr {

using NeuronId = std::uint64_t;

/// Undirected edge; `first < second` always.
struct Edge {
    NeuronId first = 0;
    NeuronId second = 0;
    std::size_t age = 0;

    bool operator==(const Edge&) const = default;
};

/// Result of a best/second-best matching unit search.
struct BmuPair {
    NeuronId best = 0;
    NeuronId second = 0;
    double best_distance = 0.0;
    double second_distance = 0.0;
    // Number of distance evaluations performed (one per neuron).
    std::size_t distance_evaluations = 0;
};

/// Result of a best-matching unit search when the runner-up is not needed.
struct BestMatch {
    NeuronId id = 0;
    double distance = 0.0;
    std::size_t distance_evaluations = 0;
};

struct StepReport {
    NeuronId bmu = 0;
    NeuronId second_bmu = 0;
    double activity = 0.0;
    double bmu_distance = 0.0;
    // Firing counter of the BMU when the insertion decision was taken.
    double bmu_firing = 0.0;
    bool inserted = false;
    std::optional<NeuronId> new_neuron;
    std::size_t removed_neurons = 0;
    std::size_t removed_edges = 0;
};

/// Growing graph of prototypes with aged edges and habituating firing
/// counters. Every row stores `row_width` weights; matching (BMU search and
/// activity) only looks at the leading `match_width` of them. Plain GWR uses
/// match_width == row_width. The predictive variant stores [w_in | w_out] and
/// matches on w_in; weight adaptation and midpoint insertion act on the whole
/// row, which applies the same epsilon * firing factor to both halves.
///
/// Neurons are kept sorted by id; ids are assigned in increasing order and
/// never reused, so a forward scan with strict comparison breaks distance ties
/// toward the smallest id.
class PrototypeGraph {
public:
    PrototypeGraph() = default;
    PrototypeGraph(std::size_t row_width, std::size_t match_width, GwrParams params);

    /// Replaces the contents with two neurons at the given rows, firing 1, no edges.
    void seed(std::span<const double> first_row, std::span<const double> second_row);

    bool initialized() const { return !ids_.empty(); }
    std::size_t row_width() const { return row_width_; }
    std::size_t match_width() const { return match_width_; }
    const GwrParams& params() const { return params_; }
    void set_params(const GwrParams& params);

    std::size_t neuron_count() const { return ids_.size(); }
    std::size_t edge_count() const;
    std::uint64_t step_count() const { return steps_; }

    /// Ids in ascending order.
    std::span<const NeuronId> ids() const { return ids_; }
    std::optional<std::size_t> index_of(NeuronId id) const;
    bool contains(NeuronId id) const { return index_of(id).has_value(); }

    std::span<const double> row(std::size_t index) const;
    std::span<const double> row_by_id(NeuronId id) const;
    double firing(std::size_t index) const { return firing_[index]; }
    double firing_by_id(NeuronId id) const;

    /// Peers of a neuron with the age of the connecting edge.
    std::vector<Edge> edges_of(NeuronId id) const;
    std::vector<Edge> edges() const;
    std::optional<std::size_t> edge_age(NeuronId a, NeuronId b) const;

    /// Linear scan over all neurons using the leading match_width entries of
    /// each row. Requires at least two neurons.
    BmuPair find_bmus(std::span<const double> query) const;
    /// Same scan for the best unit only; agrees with find_bmus().best.
    BestMatch find_best(std::span<const double> query) const;

    /// One learning iteration on a full row.
    StepReport train_step(std::span<const double> sample_row);

    /// Direct weight access for tests and tools that need to perturb a row.
    std::span<double> mutable_row(std::size_t index);

    void write(std::ostream& out) const;
    static PrototypeGraph read(std::istream& in, std::size_t row_width, std::size_t match_width,
                               const GwrParams& params);

    bool operator==(const PrototypeGraph&) const = default;

private:
    void check_query(std::span<const double> query) const;
    struct Link {
        NeuronId peer = 0;
        std::size_t age = 0;
        bool operator==(const Link&) const = default;
    };

    std::size_t require_index(NeuronId id) const;
    NeuronId append_neuron(std::span<const double> row);
    void connect(std::size_t a, std::size_t b);
    bool disconnect(std::size_t a, std::size_t b);
    void set_age(std::size_t a, NeuronId b, std::size_t age);
    void erase_neuron(std::size_t index);

    std::size_t row_width_ = 0;
    std::size_t match_width_ = 0;
    GwrParams params_{};
    std::vector<NeuronId> ids_;
    std::vector<double> weights_;
    std::vector<double> firing_;
    std::vector<std::vector<Link>> links_;
    NeuronId next_id_ = 0;
    std::uint64_t steps_ = 0;
};

/// exp(-distance), the activity of a match.
double activity_from_distance(double distance);

/// exp(-||x - w||).
double activation(std::span<const double> x, std::span<const double> weight);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Throws DomainError if any element is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace gwr
