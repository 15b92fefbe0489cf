#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gwr/motion.hpp"

namespace gwr {

enum class PatternShape { RaiseLateral, RaiseFront, Wave, CircleCw, CircleCcw };
enum class ArmSide { Left, Right, Both };

struct MotionPattern {
    PatternShape shape = PatternShape::Wave;
    ArmSide side = ArmSide::Both;

    /// e.g. "raise-lateral-left", "circle-ccw-both".
    std::string label() const;
    static MotionPattern parse(std::string_view label);

    bool operator==(const MotionPattern&) const = default;
};

/// The ten demonstration patterns of the default synthetic suite.
std::vector<MotionPattern> default_patterns();

/// Per-subject execution style: how large, how fast and with what phase a
/// subject performs every pattern.
struct SubjectStyle {
    double amplitude_scale = 1.0;
    double tempo_scale = 1.0;
    double phase_offset = 0.0;

    /// Style drawn uniformly around the nominal one; jitter 0 gives the nominal style.
    static SubjectStyle draw(double jitter, std::uint64_t seed);
};

/// Smooth periodic arm trajectory at `fps` with additive Gaussian noise;
/// the arm not involved in the pattern stays at the rest pose.
MotionSequence generate_synthetic(const MotionPattern& pattern, const SubjectStyle& style, double noise_std,
                                  double duration_s, std::uint64_t seed, double fps = 10.0);

/// Style drawn from `seed` with the given jitter.
MotionSequence generate_synthetic(const MotionPattern& pattern, double subject_jitter, double noise_std,
                                  double duration_s, std::uint64_t seed, double fps = 10.0);

struct DropoutResult {
    MotionSequence sequence;
    double achieved_fraction = 0.0;
    std::vector<std::size_t> removed_chunk_starts;  // indices into the input sequence
};

/// Removes randomly placed, non-overlapping runs of `chunk_frames` frames
/// until at least `target_fraction` of the sequence is gone. The frame after
/// each removed run is flagged as following a gap.
DropoutResult corrupt_dropout(const MotionSequence& seq, double target_fraction, std::size_t chunk_frames,
                              std::uint64_t seed);

/// One pattern with its demonstrations.
struct PatternDemos {
    std::string label;
    std::vector<MotionSequence> demos;
    std::vector<std::size_t> subjects;      // subject index per demo
    std::vector<std::size_t> repetitions;   // repetition index per demo
};

struct Dataset {
    std::vector<PatternDemos> patterns;
    std::size_t sequence_count() const;
};

struct SyntheticSuiteSpec {
    std::vector<MotionPattern> patterns = default_patterns();
    std::size_t subjects = 3;
    std::size_t repetitions = 10;
    double duration_s = 10.0;
    double noise_std = 0.01;
    double subject_jitter = 0.1;
    double fps = 10.0;
};

/// Deterministic synthetic dataset: every (pattern, subject, repetition)
/// triple gets its own noise seed; a subject keeps its style across patterns.
Dataset generate_suite(const SyntheticSuiteSpec& spec, std::uint64_t seed);

/// Stable 64-bit mixing of a seed with a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gwr
