#include "gwr/delay.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "gwr/error.hpp"
#include "gwr/number_format.hpp"

namespace gwr {

void DelayModel::validate() const {
    if (!(latency_ms >= 0.0) || !std::isfinite(latency_ms)) throw ConfigError("latency must be non-negative");
    if (!(jitter_ms >= 0.0) || !std::isfinite(jitter_ms)) throw ConfigError("jitter must be non-negative");
    if (!(frame_period_ms > 0.0) || !std::isfinite(frame_period_ms)) {
        throw ConfigError("frame period must be positive");
    }
}

namespace {

std::size_t frames_for(double ms, double period_ms) {
    return static_cast<std::size_t>(std::ceil(ms / period_ms - 1e-9));
}

}  // namespace

std::size_t DelayModel::horizon_frames() const {
    validate();
    return frames_for(latency_ms + jitter_ms, frame_period_ms);
}

CommandChoice select_command(std::span<const double> joints, const PredictionBuffer& buffer) {
    if (buffer.predictions.empty()) throw DomainError("prediction buffer is empty");
    std::size_t best = 0;
    double best_distance = 0.0;
    for (std::size_t i = 0; i < buffer.predictions.size(); ++i) {
        const auto& p = buffer.predictions[i];
        if (p.size() != joints.size()) {
            throw DimensionError("prediction " + std::to_string(i) + " has " + std::to_string(p.size()) +
                                 " joints, expected " + std::to_string(joints.size()));
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) sum += (joints[k] - p[k]) * (joints[k] - p[k]);
        if (i == 0 || sum < best_distance) {
            best = i;
            best_distance = sum;
        }
    }
    return {buffer.predictions[best], best};
}

namespace {

double mean_abs(std::span<const double> a, std::span<const double> b, double& squared_sum) {
    double total = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double e = a[k] - b[k];
        total += std::abs(e);
        squared_sum += e * e;
    }
    return total / static_cast<double>(a.size());
}

}  // namespace

LagReport run_pipeline(const Hierarchy& hierarchy, const FrameSeries& frames, const DelayModel& delay,
                       DelayMode mode, std::uint64_t seed) {
    delay.validate();
    if (!hierarchy.trained()) throw StateError("delay compensation needs a trained hierarchy");
    const std::size_t horizon = delay.horizon_frames();
    const SequenceForecast forecast = hierarchy.forecast(frames, std::max<std::size_t>(horizon, 1));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, delay.jitter_ms);

    LagReport report;
    double squared = 0.0;
    double baseline_squared = 0.0;
    std::size_t components = 0;
    for (const auto& point : forecast.points) {
        PredictionBuffer buffer;
        buffer.base_time = point.frame_index;
        const auto now = hierarchy.frame_part(point.current);
        buffer.predictions.emplace_back(now.begin(), now.end());
        for (std::size_t i = 0; i < horizon; ++i) {
            const auto p = hierarchy.frame_part(point.predicted[i]);
            buffer.predictions.emplace_back(p.begin(), p.end());
        }

        CommandChoice choice;
        std::size_t lead = horizon;
        if (mode == DelayMode::Fixed) {
            choice = {buffer.predictions[horizon], horizon};
        } else {
            const double delay_ms = delay.latency_ms + (delay.jitter_ms > 0.0 ? jitter(rng) : 0.0);
            const double delay_frames = delay_ms / delay.frame_period_ms;
            lead = std::min(frames_for(delay_ms, delay.frame_period_ms), horizon);
            const auto lo = static_cast<std::size_t>(std::floor(delay_frames + 1e-9));
            const double frac = std::max(0.0, delay_frames - static_cast<double>(lo));
            const auto& a = buffer.predictions[std::min(lo, horizon)];
            const auto& b = buffer.predictions[lead];
            std::vector<double> expected(a.size());
            for (std::size_t k = 0; k < a.size(); ++k) expected[k] = (1.0 - frac) * a[k] + frac * b[k];
            choice = select_command(expected, buffer);
        }

        const std::size_t due = point.frame_index + lead;
        if (due >= frames.size()) continue;
        bool crosses_gap = false;
        for (std::size_t j = point.frame_index + 1; j <= due; ++j) crosses_gap = crosses_gap || frames.has_gap_before(j);
        if (crosses_gap) continue;

        const auto truth = frames.frame(due);
        LagRow row;
        row.frame_index = point.frame_index;
        row.chosen_index = choice.index;
        row.abs_error = mean_abs(choice.command, truth, squared);
        row.baseline_abs_error = mean_abs(buffer.predictions[0], truth, baseline_squared);
        row.command = std::move(choice.command);
        row.truth.assign(truth.begin(), truth.end());
        components += truth.size();
        report.mae += row.abs_error;
        report.baseline_mae += row.baseline_abs_error;
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw DomainError("sequence is too short for the warm-up plus delay horizon");
    const auto n = static_cast<double>(report.rows.size());
    report.mae /= n;
    report.baseline_mae /= n;
    report.mse = squared / static_cast<double>(components);
    report.baseline_mse = baseline_squared / static_cast<double>(components);
    return report;
}

void write_lag_csv(std::ostream& out, const LagReport& report) {
    const std::size_t dim = report.rows.empty() ? kJointCount : report.rows.front().command.size();
    out << "frame_index,chosen_index";
    for (std::size_t k = 0; k < dim; ++k) out << ",command_" << k;
    for (std::size_t k = 0; k < dim; ++k) out << ",truth_" << k;
    out << ",abs_error\n";
    for (const auto& row : report.rows) {
        out << row.frame_index << ',' << row.chosen_index;
        for (const double v : row.command) out << ',' << format_exact(v);
        for (const double v : row.truth) out << ',' << format_exact(v);
        out << ',' << format_exact(row.abs_error) << '\n';
    }
}

}  // namespace gwr
