#include "gwr/prototype_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "gwr/error.hpp"
#include "text_io.hpp"

namespace gwr {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("distance between vectors of length " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double activity_from_distance(double distance) { return std::exp(-distance); }

double activation(std::span<const double> x, std::span<const double> weight) {
    return activity_from_distance(euclidean_distance(x, weight));
}

void require_finite(std::span<const double> values, const char* what) {
    for (const double v : values) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " contains a non-finite value");
    }
}

PrototypeGraph::PrototypeGraph(std::size_t row_width, std::size_t match_width, GwrParams params)
    : row_width_(row_width), match_width_(match_width), params_(params) {
    if (match_width == 0 || match_width > row_width) {
        throw DimensionError("match width must be in [1, row width]");
    }
    params_.validate();
}

void PrototypeGraph::set_params(const GwrParams& params) {
    params.validate();
    params_ = params;
}

void PrototypeGraph::seed(std::span<const double> first_row, std::span<const double> second_row) {
    if (first_row.size() != row_width_ || second_row.size() != row_width_) {
        throw DimensionError("seed rows must have " + std::to_string(row_width_) + " elements, got " +
                             std::to_string(first_row.size()) + " and " + std::to_string(second_row.size()));
    }
    require_finite(first_row, "seed sample");
    require_finite(second_row, "seed sample");
    ids_.clear();
    weights_.clear();
    firing_.clear();
    links_.clear();
    next_id_ = 0;
    steps_ = 0;
    append_neuron(first_row);
    append_neuron(second_row);
}

std::size_t PrototypeGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto& l : links_) total += l.size();
    return total / 2;
}

std::optional<std::size_t> PrototypeGraph::index_of(NeuronId id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t PrototypeGraph::require_index(NeuronId id) const {
    const auto index = index_of(id);
    if (!index) throw StateError("unknown neuron id " + std::to_string(id));
    return *index;
}

std::span<const double> PrototypeGraph::row(std::size_t index) const {
    return {weights_.data() + index * row_width_, row_width_};
}

std::span<double> PrototypeGraph::mutable_row(std::size_t index) {
    return {weights_.data() + index * row_width_, row_width_};
}

std::span<const double> PrototypeGraph::row_by_id(NeuronId id) const { return row(require_index(id)); }

double PrototypeGraph::firing_by_id(NeuronId id) const { return firing_[require_index(id)]; }

std::vector<Edge> PrototypeGraph::edges_of(NeuronId id) const {
    std::vector<Edge> out;
    for (const Link& l : links_[require_index(id)]) {
        out.push_back({std::min(id, l.peer), std::max(id, l.peer), l.age});
    }
    return out;
}

std::vector<Edge> PrototypeGraph::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        for (const Link& l : links_[i]) {
            if (ids_[i] < l.peer) out.push_back({ids_[i], l.peer, l.age});
        }
    }
    std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    return out;
}

std::optional<std::size_t> PrototypeGraph::edge_age(NeuronId a, NeuronId b) const {
    const auto ia = index_of(a);
    if (!ia) return std::nullopt;
    for (const Link& l : links_[*ia]) {
        if (l.peer == b) return l.age;
    }
    return std::nullopt;
}

namespace {

// Squared distance accumulated in index order. Stops early once the partial
// sum exceeds `bound`; a row that is not aborted yields the exact full sum,
// so comparisons against the bound are unaffected.
inline double bounded_squared_distance(const double* q, const double* w, std::size_t n, double bound) {
    // Four interleaved partial sums per block of eight; the block order and
    // the reduction order are fixed, so the result is deterministic.
    double sum = 0.0;
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (std::size_t j = 0; j < 8; j += 4) {
            const double d0 = q[k + j] - w[k + j];
            const double d1 = q[k + j + 1] - w[k + j + 1];
            const double d2 = q[k + j + 2] - w[k + j + 2];
            const double d3 = q[k + j + 3] - w[k + j + 3];
            s0 += d0 * d0;
            s1 += d1 * d1;
            s2 += d2 * d2;
            s3 += d3 * d3;
        }
        sum += (s0 + s1) + (s2 + s3);
        // Checking every block mispredicts too often to pay off.
        if ((k & 31) == 24 && sum > bound) return sum;
    }
    for (; k < n; ++k) {
        const double d = q[k] - w[k];
        sum += d * d;
    }
    return sum;
}

}  // namespace

void PrototypeGraph::check_query(std::span<const double> query) const {
    if (ids_.size() < 2) throw StateError("BMU search needs at least two neurons");
    if (query.size() != match_width_) {
        throw DimensionError("query has " + std::to_string(query.size()) + " elements, expected " +
                             std::to_string(match_width_));
    }
}

BmuPair PrototypeGraph::find_bmus(std::span<const double> query) const {
    check_query(query);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double best = inf;
    double second = inf;
    std::size_t best_index = 0;
    std::size_t second_index = 0;
    const double* w = weights_.data();
    for (std::size_t i = 0; i < ids_.size(); ++i, w += row_width_) {
        const double sum = bounded_squared_distance(query.data(), w, match_width_, second);
        if (sum < best) {
            second = best;
            second_index = best_index;
            best = sum;
            best_index = i;
        } else if (sum < second) {
            second = sum;
            second_index = i;
        }
    }
    // Distances that overflow to infinity never displace the initial choice.
    if (second_index == best_index) second_index = best_index == 0 ? 1 : 0;
    return {ids_[best_index], ids_[second_index], std::sqrt(best), std::sqrt(second), ids_.size()};
}

BestMatch PrototypeGraph::find_best(std::span<const double> query) const {
    check_query(query);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    const double* w = weights_.data();
    for (std::size_t i = 0; i < ids_.size(); ++i, w += row_width_) {
        const double sum = bounded_squared_distance(query.data(), w, match_width_, best);
        if (sum < best) {
            best = sum;
            best_index = i;
        }
    }
    return {ids_[best_index], std::sqrt(best), ids_.size()};
}

NeuronId PrototypeGraph::append_neuron(std::span<const double> row_values) {
    const NeuronId id = next_id_++;
    ids_.push_back(id);
    weights_.insert(weights_.end(), row_values.begin(), row_values.end());
    firing_.push_back(1.0);
    links_.emplace_back();
    return id;
}

void PrototypeGraph::connect(std::size_t a, std::size_t b) {
    set_age(a, ids_[b], 0);
    set_age(b, ids_[a], 0);
}

// Adjacency lists stay sorted by peer id so equal graphs compare equal
// regardless of the order their edges were created in.
void PrototypeGraph::set_age(std::size_t a, NeuronId peer, std::size_t age) {
    auto& links = links_[a];
    const auto it = std::lower_bound(links.begin(), links.end(), peer,
                                     [](const Link& l, NeuronId p) { return l.peer < p; });
    if (it != links.end() && it->peer == peer) {
        it->age = age;
        return;
    }
    links.insert(it, {peer, age});
}

bool PrototypeGraph::disconnect(std::size_t a, std::size_t b) {
    auto drop = [](std::vector<Link>& links, NeuronId peer) {
        const auto it = std::find_if(links.begin(), links.end(), [&](const Link& l) { return l.peer == peer; });
        if (it == links.end()) return false;
        links.erase(it);
        return true;
    };
    const bool removed = drop(links_[a], ids_[b]);
    drop(links_[b], ids_[a]);
    return removed;
}

void PrototypeGraph::erase_neuron(std::size_t index) {
    ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(index));
    const auto first = weights_.begin() + static_cast<std::ptrdiff_t>(index * row_width_);
    weights_.erase(first, first + static_cast<std::ptrdiff_t>(row_width_));
    firing_.erase(firing_.begin() + static_cast<std::ptrdiff_t>(index));
    links_.erase(links_.begin() + static_cast<std::ptrdiff_t>(index));
}

StepReport PrototypeGraph::train_step(std::span<const double> sample) {
    if (!initialized()) throw StateError("network is not initialized");
    if (sample.size() != row_width_) {
        throw DimensionError("training sample has " + std::to_string(sample.size()) + " elements, expected " +
                             std::to_string(row_width_));
    }
    require_finite(sample, "training sample");

    const BmuPair match = find_bmus(sample.first(match_width_));
    const std::size_t b = *index_of(match.best);
    const std::size_t s = *index_of(match.second);

    StepReport report;
    report.bmu = match.best;
    report.second_bmu = match.second;
    report.bmu_distance = match.best_distance;
    report.activity = activity_from_distance(match.best_distance);
    report.bmu_firing = firing_[b];

    // Refresh b-s, then age every other edge at b.
    connect(b, s);
    for (Link& l : links_[b]) {
        if (l.peer == match.second) continue;
        ++l.age;
        set_age(require_index(l.peer), match.best, l.age);
    }

    const bool below_cap = !params_.max_neurons || ids_.size() < *params_.max_neurons;
    report.inserted = report.activity < params_.activation_threshold &&
                      firing_[b] < params_.firing_threshold && below_cap;

    if (report.inserted) {
        std::vector<double> midpoint(row_width_);
        const auto wb = row(b);
        for (std::size_t k = 0; k < row_width_; ++k) midpoint[k] = 0.5 * (sample[k] + wb[k]);
        const NeuronId r_id = append_neuron(midpoint);
        const std::size_t r = ids_.size() - 1;
        connect(r, b);
        connect(r, s);
        disconnect(b, s);
        report.new_neuron = r_id;
    } else {
        auto adapt = [&](std::size_t index, double rate) {
            const double factor = rate * firing_[index];
            auto w = mutable_row(index);
            for (std::size_t k = 0; k < row_width_; ++k) w[k] += factor * (sample[k] - w[k]);
        };
        adapt(b, params_.learning_rate_bmu);
        for (const Link& l : links_[b]) adapt(require_index(l.peer), params_.learning_rate_neighbor);

        firing_[b] = decay_firing(firing_[b], params_.firing_rho_bmu, params_.firing_kappa);
        for (const Link& l : links_[b]) {
            double& h = firing_[require_index(l.peer)];
            h = decay_firing(h, params_.firing_rho_neighbor, params_.firing_kappa);
        }
    }

    // Only edges at b were aged, so only they can expire.
    std::vector<NeuronId> touched;
    for (std::size_t i = 0; i < links_[b].size();) {
        const Link l = links_[b][i];
        if (l.age > params_.max_edge_age) {
            disconnect(b, require_index(l.peer));
            touched.push_back(l.peer);
            ++report.removed_edges;
        } else {
            ++i;
        }
    }
    std::sort(touched.begin(), touched.end());
    for (const NeuronId id : touched) {
        if (ids_.size() <= 2) break;
        const std::size_t index = require_index(id);
        if (links_[index].empty()) {
            erase_neuron(index);
            ++report.removed_neurons;
        }
    }

    ++steps_;
    return report;
}

void PrototypeGraph::write(std::ostream& out) const {
    out << "next_id " << next_id_ << '\n';
    out << "steps " << steps_ << '\n';
    out << "neurons " << ids_.size() << '\n';
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        out << ids_[i] << ' ' << format_exact(firing_[i]);
        for (const double w : row(i)) out << ' ' << format_exact(w);
        out << '\n';
    }
    const auto all = edges();
    out << "edges " << all.size() << '\n';
    for (const Edge& e : all) out << e.first << ' ' << e.second << ' ' << e.age << '\n';
}

PrototypeGraph PrototypeGraph::read(std::istream& in, std::size_t row_width, std::size_t match_width,
                                    const GwrParams& params) {
    PrototypeGraph graph(row_width, match_width, params);
    detail::expect_token(in, "next_id");
    graph.next_id_ = detail::read_count(in, "next_id");
    detail::expect_token(in, "steps");
    graph.steps_ = detail::read_count(in, "steps");
    detail::expect_token(in, "neurons");
    const std::size_t count = detail::read_count(in, "neuron count");
    std::vector<double> row_values(row_width);
    for (std::size_t i = 0; i < count; ++i) {
        const NeuronId id = detail::read_count(in, "neuron id");
        if (!graph.ids_.empty() && id <= graph.ids_.back()) throw ParseError("neuron ids must be increasing");
        if (id >= graph.next_id_) throw ParseError("neuron id not below next_id");
        const double firing = detail::read_double(in, "firing");
        for (double& w : row_values) w = detail::read_double(in, "weight");
        require_finite(row_values, "stored weight");
        graph.ids_.push_back(id);
        graph.weights_.insert(graph.weights_.end(), row_values.begin(), row_values.end());
        graph.firing_.push_back(firing);
        graph.links_.emplace_back();
    }
    detail::expect_token(in, "edges");
    const std::size_t edge_total = detail::read_count(in, "edge count");
    for (std::size_t i = 0; i < edge_total; ++i) {
        const NeuronId a = detail::read_count(in, "edge endpoint");
        const NeuronId b = detail::read_count(in, "edge endpoint");
        const std::size_t age = detail::read_count(in, "edge age");
        const auto ia = graph.index_of(a);
        const auto ib = graph.index_of(b);
        if (!ia || !ib || a == b) throw ParseError("edge references an invalid neuron pair");
        if (graph.edge_age(a, b)) throw ParseError("duplicate edge");
        graph.set_age(*ia, b, age);
        graph.set_age(*ib, a, age);
    }
    return graph;
}

}  // namespace gwr
