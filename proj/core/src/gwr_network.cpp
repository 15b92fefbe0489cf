#include "gwr/gwr_network.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "gwr/error.hpp"
#include "params_io.hpp"
#include "text_io.hpp"

namespace gwr {

GwrNetwork GwrNetwork::init(std::span<const double> first_sample, std::span<const double> second_sample,
                            const GwrParams& params) {
    if (first_sample.empty()) throw DimensionError("GWR input dimension must be at least 1");
    if (first_sample.size() != second_sample.size()) {
        throw DimensionError("seed samples differ in dimension (" + std::to_string(first_sample.size()) + " vs " +
                             std::to_string(second_sample.size()) + ")");
    }
    PrototypeGraph graph(first_sample.size(), first_sample.size(), params);
    graph.seed(first_sample, second_sample);
    return GwrNetwork(std::move(graph));
}

BmuPair GwrNetwork::find_bmus(std::span<const double> x) const {
    require_finite(x, "query");
    return graph_.find_bmus(x);
}

QuantizeResult GwrNetwork::quantize(std::span<const double> x) const {
    require_finite(x, "query");
    const BestMatch match = graph_.find_best(x);
    return {match.id, graph_.row_by_id(match.id), activity_from_distance(match.distance)};
}

EpochReport GwrNetwork::train_epoch(std::span<const std::vector<double>> samples) {
    if (samples.empty()) throw DomainError("train_epoch needs at least one sample");
    EpochReport report;
    double error_sum = 0.0;
    for (const auto& x : samples) {
        const StepReport step = train_step(x);
        error_sum += step.bmu_distance;
        report.inserted += step.inserted ? 1 : 0;
        report.removed_neurons += step.removed_neurons;
        report.removed_edges += step.removed_edges;
    }
    report.mean_quantization_error = error_sum / static_cast<double>(samples.size());
    report.neuron_count = neuron_count();
    return report;
}

void GwrNetwork::save(std::ostream& out) const {
    out << "gwr-network 1\n";
    out << "input_dim " << input_dim() << '\n';
    detail::write_params(out, params());
    graph_.write(out);
    out << "end\n";
}

GwrNetwork GwrNetwork::load(std::istream& in) {
    detail::expect_token(in, "gwr-network");
    const std::size_t version = detail::read_count(in, "format version");
    if (version != 1) throw ParseError("unsupported gwr-network version " + std::to_string(version));
    detail::expect_token(in, "input_dim");
    const std::size_t dim = detail::read_count(in, "input_dim");
    if (dim == 0) throw ParseError("input_dim must be positive");
    const GwrParams params = detail::read_params(in);
    PrototypeGraph graph = PrototypeGraph::read(in, dim, dim, params);
    detail::expect_token(in, "end");
    return GwrNetwork(std::move(graph));
}

}  // namespace gwr
