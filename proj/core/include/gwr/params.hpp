#pragma once

#include <cstddef>
#include <optional>

namespace gwr {

/// Learning parameters of one GWR layer. Defaults are the values used for
/// every layer of the motion hierarchy (except max_edge_age, which grows with
/// depth; see HierarchyConfig).
struct GwrParams {
    double activation_threshold = 0.98;  // a_T
    double firing_threshold = 0.1;       // f_T
    double learning_rate_bmu = 0.1;      // eps_b
    double learning_rate_neighbor = 0.01;  // eps_n
    double firing_rho_bmu = 0.3;
    double firing_rho_neighbor = 0.1;
    double firing_kappa = 1.05;
    std::size_t max_edge_age = 100;
    std::size_t max_epochs = 50;
    std::optional<std::size_t> max_neurons;

    /// Throws ConfigError when a constraint is violated.
    void validate() const;

    /// Fixed point of the firing-counter decay, 1 - 1/kappa.
    double firing_fixed_point() const { return 1.0 - 1.0 / firing_kappa; }

    bool operator==(const GwrParams&) const = default;
};

/// One application of the firing-counter decay:
/// h + rho * kappa * (1 - h) - rho.
inline double decay_firing(double firing, double rho, double kappa) {
    return firing + rho * kappa * (1.0 - firing) - rho;
}

}  // namespace gwr
