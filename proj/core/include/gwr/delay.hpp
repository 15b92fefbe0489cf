#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gwr/hierarchy.hpp"
#include "gwr/motion.hpp"

namespace gwr {

/// Sensorimotor delay: a fixed latency plus uniform jitter in [0, jitter_ms].
struct DelayModel {
    double latency_ms = 600.0;
    double jitter_ms = 0.0;
    double frame_period_ms = 100.0;

    void validate() const;
    /// ceil((latency + jitter) / frame period): the longest look-ahead needed.
    std::size_t horizon_frames() const;
};

/// P(t+0) ... P(t+h) as frames; P(t+0) is the current quantized state.
struct PredictionBuffer {
    std::size_t base_time = 0;
    std::vector<std::vector<double>> predictions;
};

struct CommandChoice {
    std::vector<double> command;
    std::size_t index = 0;
};

/// The buffered prediction closest (Euclidean) to the joint configuration
/// expected at the estimated delay; ties go to the smallest index.
CommandChoice select_command(std::span<const double> joints, const PredictionBuffer& buffer);

enum class DelayMode { Fixed, Variable };

struct LagRow {
    std::size_t frame_index = 0;   // frame at which the command is issued
    std::size_t chosen_index = 0;  // look-ahead used
    std::vector<double> command;
    std::vector<double> truth;     // raw frame due when the command executes
    double abs_error = 0.0;        // mean absolute error over joints
    double baseline_abs_error = 0.0;  // same, commanding the current quantized state
};

struct LagReport {
    std::vector<LagRow> rows;
    double mse = 0.0;
    double mae = 0.0;
    double baseline_mse = 0.0;
    double baseline_mae = 0.0;
};

/// Streams a sequence through a trained hierarchy and issues one command
/// per frame. Fixed mode commands P(t + horizon_frames). Variable mode draws
/// a delay per frame, interpolates the predicted configuration at that delay
/// and lets select_command pick the buffered prediction closest to it. Each
/// command is compared with the raw frame due at execution time.
LagReport run_pipeline(const Hierarchy& hierarchy, const FrameSeries& frames, const DelayModel& delay,
                       DelayMode mode, std::uint64_t seed);

/// CSV columns: frame_index,chosen_index,command_0..,truth_0..,abs_error
void write_lag_csv(std::ostream& out, const LagReport& report);

}  // namespace gwr
