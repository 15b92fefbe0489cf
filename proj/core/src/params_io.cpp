#include "params_io.hpp"

#include <ostream>

#include "text_io.hpp"

namespace gwr::detail {

void write_params(std::ostream& out, const GwrParams& p) {
    out << "params " << format_exact(p.activation_threshold) << ' ' << format_exact(p.firing_threshold) << ' '
        << format_exact(p.learning_rate_bmu) << ' ' << format_exact(p.learning_rate_neighbor) << ' '
        << format_exact(p.firing_rho_bmu) << ' ' << format_exact(p.firing_rho_neighbor) << ' '
        << format_exact(p.firing_kappa) << ' ' << p.max_edge_age << ' ' << p.max_epochs << ' '
        << p.max_neurons.value_or(0) << '\n';
}

GwrParams read_params(std::istream& in) {
    expect_token(in, "params");
    GwrParams p;
    p.activation_threshold = read_double(in, "activation_threshold");
    p.firing_threshold = read_double(in, "firing_threshold");
    p.learning_rate_bmu = read_double(in, "learning_rate_bmu");
    p.learning_rate_neighbor = read_double(in, "learning_rate_neighbor");
    p.firing_rho_bmu = read_double(in, "firing_rho_bmu");
    p.firing_rho_neighbor = read_double(in, "firing_rho_neighbor");
    p.firing_kappa = read_double(in, "firing_kappa");
    p.max_edge_age = read_count(in, "max_edge_age");
    p.max_epochs = read_count(in, "max_epochs");
    const std::size_t cap = read_count(in, "max_neurons");
    if (cap != 0) p.max_neurons = cap;
    try {
        p.validate();
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    return p;
}

}  // namespace gwr::detail
