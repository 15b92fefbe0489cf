#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace gwr {

/// Sliding concatenation of the last `tau` vectors, newest first:
/// o(t) = w(t) ++ w(t-1) ++ ... ++ w(t-tau+1). Nothing is emitted until the
/// window has filled after construction or reset.
class WindowEncoder {
public:
    WindowEncoder(std::size_t tau, std::size_t element_dim);

    std::optional<std::vector<double>> encode_step(std::span<const double> element);
    void reset() { buffer_.clear(); }

    std::size_t tau() const { return tau_; }
    std::size_t element_dim() const { return element_dim_; }
    std::size_t output_dim() const { return tau_ * element_dim_; }
    std::size_t buffered() const { return buffer_.size(); }
    bool full() const { return buffer_.size() == tau_; }

    /// Concatenation of the buffered elements; only meaningful when full().
    std::vector<double> current() const;

private:
    std::size_t tau_;
    std::size_t element_dim_;
    std::deque<std::vector<double>> buffer_;  // front is newest
};

}  // namespace gwr
