#include "gwr/window_encoder.hpp"

#include <string>

#include "gwr/error.hpp"

namespace gwr {

WindowEncoder::WindowEncoder(std::size_t tau, std::size_t element_dim) : tau_(tau), element_dim_(element_dim) {
    if (tau == 0) throw ConfigError("window length must be at least 1");
    if (element_dim == 0) throw ConfigError("window element dimension must be at least 1");
}

std::optional<std::vector<double>> WindowEncoder::encode_step(std::span<const double> element) {
    if (element.size() != element_dim_) {
        throw DimensionError("window element has " + std::to_string(element.size()) + " values, expected " +
                             std::to_string(element_dim_));
    }
    buffer_.emplace_front(element.begin(), element.end());
    if (buffer_.size() > tau_) buffer_.pop_back();
    if (!full()) return std::nullopt;
    return current();
}

std::vector<double> WindowEncoder::current() const {
    std::vector<double> out;
    out.reserve(buffer_.size() * element_dim_);
    for (const auto& e : buffer_) out.insert(out.end(), e.begin(), e.end());
    return out;
}

}  // namespace gwr
