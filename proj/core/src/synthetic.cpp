#include "gwr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "gwr/error.hpp"

namespace gwr {

namespace {

struct ShapeName {
    PatternShape shape;
    const char* name;
};
constexpr ShapeName kShapes[] = {
    {PatternShape::RaiseLateral, "raise-lateral"},
    {PatternShape::RaiseFront, "raise-front"},
    {PatternShape::Wave, "wave"},
    {PatternShape::CircleCw, "circle-cw"},
    {PatternShape::CircleCcw, "circle-ccw"},
};

struct SideName {
    ArmSide side;
    const char* name;
};
constexpr SideName kSides[] = {{ArmSide::Left, "left"}, {ArmSide::Right, "right"}, {ArmSide::Both, "both"}};

// Pitch, yaw, elbow yaw, elbow roll of one arm.
using ArmPose = std::array<double, 4>;

constexpr ArmPose kRest = {0.0, 0.05, 0.0, 0.15};

double base_period_s(PatternShape shape) {
    switch (shape) {
        case PatternShape::RaiseLateral:
        case PatternShape::RaiseFront:
            return 3.0;
        case PatternShape::Wave:
            return 1.6;
        case PatternShape::CircleCw:
        case PatternShape::CircleCcw:
            return 2.4;
    }
    return 2.0;
}

// `theta` is the pattern phase in radians; `mirror` is +1 for the left arm, -1 for the right.
ArmPose active_pose(PatternShape shape, double theta, double amplitude, double mirror) {
    const double lift = 0.5 * (1.0 - std::cos(theta));
    switch (shape) {
        case PatternShape::RaiseLateral:
            return {0.0, 0.05 + 1.45 * amplitude * lift, 0.0, 0.15 - 0.1 * lift};
        case PatternShape::RaiseFront:
            return {1.5 * amplitude * lift, 0.05, 0.3 * lift, 0.15};
        case PatternShape::Wave:
            return {1.2, 0.4, 1.0, 0.9 + 0.5 * amplitude * std::sin(theta)};
        case PatternShape::CircleCw:
        case PatternShape::CircleCcw: {
            const double direction = shape == PatternShape::CircleCw ? 1.0 : -1.0;
            return {1.0 + 0.45 * amplitude * std::cos(theta),
                    0.5 + 0.45 * amplitude * direction * mirror * std::sin(theta), 0.0, 0.3};
        }
    }
    return kRest;
}

}  // namespace

std::string MotionPattern::label() const {
    std::string out;
    for (const auto& s : kShapes) {
        if (s.shape == shape) out = s.name;
    }
    for (const auto& s : kSides) {
        if (s.side == side) out += std::string("-") + s.name;
    }
    return out;
}

MotionPattern MotionPattern::parse(std::string_view label) {
    for (const auto& shape : kShapes) {
        for (const auto& side : kSides) {
            if (label == std::string(shape.name) + "-" + side.name) return {shape.shape, side.side};
        }
    }
    throw ConfigError("unknown motion pattern '" + std::string(label) + "'");
}

std::vector<MotionPattern> default_patterns() {
    return {
        {PatternShape::RaiseLateral, ArmSide::Left}, {PatternShape::RaiseLateral, ArmSide::Right},
        {PatternShape::RaiseLateral, ArmSide::Both}, {PatternShape::RaiseFront, ArmSide::Left},
        {PatternShape::RaiseFront, ArmSide::Right},  {PatternShape::RaiseFront, ArmSide::Both},
        {PatternShape::Wave, ArmSide::Left},         {PatternShape::Wave, ArmSide::Right},
        {PatternShape::CircleCw, ArmSide::Both},     {PatternShape::CircleCcw, ArmSide::Both},
    };
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SubjectStyle SubjectStyle::draw(double jitter, std::uint64_t seed) {
    if (jitter < 0.0) throw DomainError("subject jitter must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    SubjectStyle style;
    style.amplitude_scale = 1.0 + jitter * unit(rng);
    style.tempo_scale = 1.0 + 0.2 * jitter * unit(rng);
    style.phase_offset = std::numbers::pi * jitter * unit(rng);
    return style;
}

MotionSequence generate_synthetic(const MotionPattern& pattern, const SubjectStyle& style, double noise_std,
                                  double duration_s, std::uint64_t seed, double fps) {
    if (!(duration_s >= 1.0)) throw DomainError("synthetic sequences last at least 1 s");
    if (!(noise_std >= 0.0)) throw DomainError("noise_std must be non-negative");
    if (!(fps > 0.0)) throw DomainError("fps must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto frame_count = static_cast<std::size_t>(std::llround(duration_s * fps));
    const double omega = 2.0 * std::numbers::pi * style.tempo_scale / base_period_s(pattern.shape);
    const bool left_active = pattern.side != ArmSide::Right;
    const bool right_active = pattern.side != ArmSide::Left;

    MotionSequence seq;
    seq.fps = fps;
    seq.pattern_label = pattern.label();
    seq.frames.reserve(frame_count);
    for (std::size_t i = 0; i < frame_count; ++i) {
        const double theta = omega * static_cast<double>(i) / fps + style.phase_offset;
        const ArmPose left = left_active ? active_pose(pattern.shape, theta, style.amplitude_scale, 1.0) : kRest;
        const ArmPose right = right_active ? active_pose(pattern.shape, theta, style.amplitude_scale, -1.0) : kRest;
        Frame f{};
        std::copy(left.begin(), left.end(), f.begin());
        std::copy(right.begin(), right.end(), f.begin() + 4);
        if (noise_std > 0.0) {
            for (double& v : f) v += noise_std * noise(rng);
        }
        seq.frames.push_back(f);
    }
    return seq;
}

MotionSequence generate_synthetic(const MotionPattern& pattern, double subject_jitter, double noise_std,
                                  double duration_s, std::uint64_t seed, double fps) {
    const SubjectStyle style = SubjectStyle::draw(subject_jitter, derive_seed(seed, 0));
    return generate_synthetic(pattern, style, noise_std, duration_s, derive_seed(seed, 1), fps);
}

DropoutResult corrupt_dropout(const MotionSequence& seq, double target_fraction, std::size_t chunk_frames,
                              std::uint64_t seed) {
    if (!(target_fraction >= 0.0 && target_fraction <= 0.95)) {
        throw DomainError("dropout fraction must lie in [0, 0.95]");
    }
    DropoutResult result;
    result.sequence = seq;
    if (target_fraction == 0.0) return result;

    const std::size_t n = seq.size();
    if (chunk_frames == 0 || chunk_frames > n) throw DomainError("dropout chunk must fit inside the sequence");
    const double wanted = target_fraction * static_cast<double>(n) / static_cast<double>(chunk_frames);
    const auto chunks = static_cast<std::size_t>(std::ceil(wanted - 1e-9));
    if (chunks * chunk_frames > n) {
        throw DomainError("dropout target is not reachable with " + std::to_string(chunk_frames) +
                          "-frame chunks on " + std::to_string(n) + " frames");
    }

    // Non-overlapping placement: choose `chunks` distinct slots among
    // free + chunks positions, then spread them by the chunk length.
    const std::size_t free = n - chunks * chunk_frames;
    std::vector<std::size_t> slots(free + chunks);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    std::sample(slots.begin(), slots.end(), std::back_inserter(chosen), chunks, rng);
    std::sort(chosen.begin(), chosen.end());

    std::vector<std::uint8_t> removed(n, 0);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const std::size_t start = chosen[i] - i + i * chunk_frames;
        result.removed_chunk_starts.push_back(start);
        std::fill_n(removed.begin() + static_cast<std::ptrdiff_t>(start), chunk_frames, std::uint8_t{1});
    }

    MotionSequence& out = result.sequence;
    out.frames.clear();
    out.gap_before.clear();
    bool pending_gap = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (removed[i]) {
            pending_gap = true;
            continue;
        }
        out.frames.push_back(seq.frames[i]);
        out.gap_before.push_back(pending_gap || seq.has_gap_before(i) ? 1 : 0);
        pending_gap = false;
    }
    result.achieved_fraction = static_cast<double>(chunks * chunk_frames) / static_cast<double>(n);
    return result;
}

std::size_t Dataset::sequence_count() const {
    std::size_t total = 0;
    for (const auto& p : patterns) total += p.demos.size();
    return total;
}

Dataset generate_suite(const SyntheticSuiteSpec& spec, std::uint64_t seed) {
    if (spec.patterns.empty() || spec.subjects == 0 || spec.repetitions == 0) {
        throw ConfigError("synthetic suite needs at least one pattern, subject and repetition");
    }
    std::vector<SubjectStyle> styles;
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        styles.push_back(SubjectStyle::draw(spec.subject_jitter, derive_seed(seed, 1000 + s)));
    }
    Dataset data;
    for (std::size_t p = 0; p < spec.patterns.size(); ++p) {
        PatternDemos demos;
        demos.label = spec.patterns[p].label();
        for (std::size_t s = 0; s < spec.subjects; ++s) {
            for (std::size_t r = 0; r < spec.repetitions; ++r) {
                const std::uint64_t stream = (p * 1000 + s) * 1000 + r;
                MotionSequence seq = generate_synthetic(spec.patterns[p], styles[s], spec.noise_std, spec.duration_s,
                                                        derive_seed(seed, 1'000'000 + stream), spec.fps);
                seq.subject_id = "s" + std::to_string(s + 1);
                demos.demos.push_back(std::move(seq));
                demos.subjects.push_back(s);
                demos.repetitions.push_back(r);
            }
        }
        data.patterns.push_back(std::move(demos));
    }
    return data;
}

}  // namespace gwr
