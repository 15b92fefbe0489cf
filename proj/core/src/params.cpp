#include "gwr/params.hpp"

#include <string>

#include "gwr/error.hpp"

namespace gwr {

namespace {

void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError("invalid GWR parameters: " + message);
}

}  // namespace

void GwrParams::validate() const {
    check(activation_threshold > 0.0 && activation_threshold < 1.0, "activation_threshold must be in (0, 1)");
    check(firing_threshold > 0.0 && firing_threshold < 1.0, "firing_threshold must be in (0, 1)");
    check(learning_rate_neighbor > 0.0 && learning_rate_neighbor <= learning_rate_bmu && learning_rate_bmu < 1.0,
          "need 0 < learning_rate_neighbor <= learning_rate_bmu < 1");
    check(firing_rho_bmu > 0.0 && firing_rho_neighbor > 0.0, "firing rho values must be positive");
    check(firing_kappa > 1.0, "firing_kappa must exceed 1");
    // rho * kappa <= 1 keeps the decay monotone, so counters never undershoot 1 - 1/kappa.
    check(firing_rho_bmu * firing_kappa <= 1.0 && firing_rho_neighbor * firing_kappa <= 1.0,
          "firing rho * kappa must not exceed 1");
    check(max_edge_age >= 1, "max_edge_age must be at least 1");
    check(max_epochs >= 1, "max_epochs must be at least 1");
    check(!max_neurons || *max_neurons >= 2, "max_neurons must be at least 2");
}

}  // namespace gwr
