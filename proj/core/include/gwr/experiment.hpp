#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gwr/delay.hpp"
#include "gwr/hierarchy.hpp"
#include "gwr/synthetic.hpp"

namespace gwr {

enum class DatasetSource { Synthetic, Files };

struct DatasetConfig {
    DatasetSource source = DatasetSource::Synthetic;
    std::filesystem::path directory;  // Files source
    SyntheticSuiteSpec synthetic;
    // Demonstrations per pattern used when measuring prediction error; 0 = all.
    std::size_t eval_sequences_per_pattern = 0;
    // Extra demonstrations per pattern kept out of training (delay demo).
    std::size_t heldout_per_pattern = 1;
};

struct ProtocolConfig {
    std::size_t epochs_per_sequence = 50;
    std::size_t presentation_orders = 5;
};

struct SweepConfig {
    std::vector<double> activation_thresholds = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99};
    std::vector<std::size_t> horizons = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::vector<double> loss_fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::size_t loss_chunk_frames = 10;
    std::size_t loss_epochs = 50;
};

struct DelayDemoConfig {
    DelayModel fixed{600.0, 0.0, 100.0};
    DelayModel variable{400.0, 200.0, 100.0};
};

struct ExperimentConfig {
    DatasetConfig dataset;
    HierarchyConfig hierarchy;
    ProtocolConfig protocol;
    SweepConfig sweeps;
    DelayDemoConfig delay;
    std::size_t threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// JSON config; every key is optional and falls back to the defaults above.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON text of a config (stable key order).
std::string dump_experiment_config(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct PreparedData {
    Dataset train;
    Dataset heldout;  // same pattern order as train; may be empty per pattern
};

/// Synthetic suite (plus held-out repetitions) or a dataset directory.
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// Mean error over the evaluation sequences of the given patterns, each
/// sequence weighted equally. Errors are measured at `horizon` frames ahead.
struct PatternError {
    double mse = 0.0;  // against the input frames (C.P.E. contribution)
    double pe = 0.0;   // against the hierarchy's own representation (P.E.)
    double mae = 0.0;
};
PatternError evaluate_patterns(const Hierarchy& hierarchy, const Dataset& data, std::span<const std::size_t> patterns,
                               std::size_t eval_per_pattern, std::size_t horizon);

struct MetricsRecord {
    std::size_t order = 0;
    std::size_t epoch = 0;  // global epoch index within the order
    std::size_t block = 0;  // how many patterns were introduced before this one
    std::string pattern;
    double cpe = 0.0;
    double pe = 0.0;
    std::vector<double> sequence_mse;  // per introduced pattern, in introduction order
    std::array<std::size_t, 3> neurons{};
    std::uint64_t train_steps = 0;
    // Windows until the online P-GWR error first drops below twice the median
    // of its final-epoch level; only set on the first epoch of a block.
    std::size_t adaptation_windows = 0;
};

struct AveragedRecord {
    std::size_t epoch = 0;
    std::size_t block = 0;
    double cpe = 0.0;
    double cpe_std = 0.0;
    double pe = 0.0;
    double pe_std = 0.0;
    std::array<double, 3> neurons{};
    std::array<double, 3> neurons_std{};
};

struct IncrementalResult {
    std::vector<std::vector<MetricsRecord>> per_order;
    std::vector<AveragedRecord> averaged;
    std::vector<std::vector<std::size_t>> orders;  // pattern permutation per order
    std::vector<Hierarchy> hierarchies;            // final state per order
};

/// Presentation order `k`: identity for k == 0, a seeded permutation otherwise.
std::vector<std::size_t> presentation_order(std::size_t patterns, std::size_t k, std::uint64_t seed);

/// Introduces patterns one at a time, training epochs_per_sequence epochs on
/// each (an epoch presents every training demo of the current pattern once),
/// and records C.P.E. and P.E. after every epoch. Orders run in parallel.
IncrementalResult run_incremental(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed);

/// The incremental schedule for a single presentation order; returns the trained hierarchy.
Hierarchy train_incremental(const ExperimentConfig& config, const PreparedData& data,
                            std::span<const std::size_t> order, std::vector<MetricsRecord>* records = nullptr,
                            std::size_t order_index = 0);

struct ThresholdRow {
    double activation_threshold = 0.0;
    std::size_t neurons = 0;
    double mse = 0.0;
};

/// Keeps GWR1/GWR2 of `trained` fixed and relearns the P-GWR incrementally
/// once per activation threshold.
std::vector<ThresholdRow> sweep_activation_threshold(const ExperimentConfig& config, const PreparedData& data,
                                                     const Hierarchy& trained);

struct HorizonRow {
    std::size_t horizon = 0;
    double mae = 0.0;
    double mae_std = 0.0;
    double mse = 0.0;
};

/// Recursive multi-step prediction error per horizon on the evaluation sequences.
std::vector<HorizonRow> sweep_horizon(const ExperimentConfig& config, const PreparedData& data,
                                      const Hierarchy& trained);

struct LossRow {
    double loss_fraction = 0.0;
    double achieved_fraction = 0.0;  // mean over corrupted presentations
    double mse = 0.0;                // NaN when no pattern formed a predictor
    std::size_t evaluated_patterns = 0;  // patterns whose predictor formed
    std::size_t evaluated_epochs = 0;    // summed over patterns
};

/// For every loss fraction and pattern, trains a fresh hierarchy for
/// loss_epochs epochs on the pattern's demos, corrupting every presentation
/// independently. The clean-data MSE is averaged over the epochs after which
/// a predictor exists, then over the patterns where one formed at all.
std::vector<LossRow> sweep_data_loss(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed);

struct DelaySummaryRow {
    std::string sequence;
    std::string pattern;
    DelayMode mode = DelayMode::Fixed;
    std::size_t horizon_frames = 0;
    LagReport report;
};

/// Fixed and variable delay compensation on every held-out demonstration.
std::vector<DelaySummaryRow> run_delay_demo(const ExperimentConfig& config, const PreparedData& data,
                                            const Hierarchy& trained, std::uint64_t seed);

// CSV writers; the schemas are documented in docs/FORMATS.md.
void write_incremental_order_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_incremental_sequences_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_incremental_average_csv(std::ostream& out, const std::vector<AveragedRecord>& records);
void write_threshold_csv(std::ostream& out, const std::vector<ThresholdRow>& rows);
void write_horizon_csv(std::ostream& out, const std::vector<HorizonRow>& rows);
void write_loss_csv(std::ostream& out, const std::vector<LossRow>& rows);
void write_delay_summary_csv(std::ostream& out, const std::vector<DelaySummaryRow>& rows);

/// Runs fn(0) ... fn(count - 1) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace gwr
