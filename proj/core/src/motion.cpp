#include "gwr/motion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gwr/error.hpp"

namespace gwr {

const std::array<std::string, kJointCount>& joint_names() {
    static const std::array<std::string, kJointCount> names = {
        "l_shoulder_pitch", "l_shoulder_yaw", "l_elbow_yaw", "l_elbow_roll",
        "r_shoulder_pitch", "r_shoulder_yaw", "r_elbow_yaw", "r_elbow_roll",
    };
    return names;
}

void MotionSequence::validate(const JointLimits& limits) const {
    if (frames.empty()) throw DomainError("motion sequence is empty");
    if (!gap_before.empty() && gap_before.size() != frames.size()) {
        throw DimensionError("gap flags do not match frame count");
    }
    if (!(fps > 0.0) || !std::isfinite(fps)) throw DomainError("fps must be positive");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            const double v = frames[i][j];
            if (!std::isfinite(v)) {
                throw DomainError("frame " + std::to_string(i) + " has a non-finite " + joint_names()[j]);
            }
            if (v < limits.lower || v > limits.upper) {
                throw DomainError("frame " + std::to_string(i) + " " + joint_names()[j] + " outside joint limits");
            }
        }
    }
}

FrameSeries FrameSeries::from(const MotionSequence& seq) {
    FrameSeries series;
    series.dim = kJointCount;
    series.values.reserve(seq.size() * kJointCount);
    for (const Frame& f : seq.frames) series.values.insert(series.values.end(), f.begin(), f.end());
    series.gap_before = seq.gap_before;
    return series;
}

FrameSeries FrameSeries::from_rows(const std::vector<std::vector<double>>& rows) {
    FrameSeries series;
    series.dim = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != series.dim) throw DimensionError("rows differ in length");
        series.values.insert(series.values.end(), r.begin(), r.end());
    }
    return series;
}

MotionSequence median_downsample(std::span<const Frame> raw, double raw_fps) {
    if (raw.size() < 3) throw DomainError("median downsampling needs at least 3 frames");
    MotionSequence out;
    out.fps = raw_fps / 3.0;
    out.frames.reserve(raw.size() / 3);
    for (std::size_t k = 0; k + 3 <= raw.size(); k += 3) {
        Frame f{};
        for (std::size_t j = 0; j < kJointCount; ++j) {
            std::array<double, 3> triple = {raw[k][j], raw[k + 1][j], raw[k + 2][j]};
            std::sort(triple.begin(), triple.end());
            f[j] = triple[1];
        }
        out.frames.push_back(f);
    }
    return out;
}

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

constexpr double kMinLength = 1e-9;

Vec3 normalized(const Vec3& v, const char* what) {
    const double n = norm(v);
    if (!(n > kMinLength)) throw DomainError(std::string("degenerate skeleton: zero-length ") + what);
    return scale(v, 1.0 / n);
}

Vec3 reject(const Vec3& v, const Vec3& unit_axis) { return sub(v, scale(unit_axis, dot(v, unit_axis))); }

struct TorsoFrame {
    Vec3 lateral;
    Vec3 up;
    Vec3 forward;
};

std::array<double, 4> arm_angles(const ArmPoints& arm, const TorsoFrame& torso, double outward_sign) {
    for (const Vec3* p : {&arm.shoulder, &arm.elbow, &arm.hand}) {
        for (double c : *p) {
            if (!std::isfinite(c)) throw DomainError("skeleton has non-finite coordinates");
        }
    }
    const Vec3 upper = sub(arm.elbow, arm.shoulder);
    const Vec3 fore = sub(arm.hand, arm.elbow);
    const Vec3 upper_dir = normalized(upper, "upper arm");
    const Vec3 fore_dir = normalized(fore, "forearm");

    const double a_out = outward_sign * dot(upper_dir, torso.lateral);
    const double a_up = dot(upper_dir, torso.up);
    const double a_fwd = dot(upper_dir, torso.forward);

    const double pitch = std::atan2(a_fwd, -a_up);
    const double yaw = std::atan2(a_out, std::hypot(a_up, a_fwd));
    const double roll = std::acos(std::clamp(dot(upper_dir, fore_dir), -1.0, 1.0));

    double elbow_yaw = 0.0;
    const Vec3 fore_perp = reject(fore_dir, upper_dir);
    if (norm(fore_perp) > 1e-12) {
        Vec3 reference = reject(torso.forward, upper_dir);
        if (norm(reference) < 1e-9) reference = reject(torso.up, upper_dir);
        reference = normalized(reference, "elbow reference");
        elbow_yaw = std::atan2(dot(cross(reference, fore_perp), upper_dir), dot(reference, fore_perp));
    }
    return {pitch, yaw, elbow_yaw, roll};
}

}  // namespace

Frame angles_from_skeleton(const SkeletonFrame& s) {
    TorsoFrame torso;
    torso.up = normalized(sub(s.neck, s.torso), "torso-neck segment");
    torso.lateral = normalized(reject(sub(s.left.shoulder, s.right.shoulder), torso.up), "shoulder line");
    torso.forward = cross(torso.lateral, torso.up);

    const auto left = arm_angles(s.left, torso, 1.0);
    const auto right = arm_angles(s.right, torso, -1.0);
    Frame f{};
    std::copy(left.begin(), left.end(), f.begin());
    std::copy(right.begin(), right.end(), f.begin() + 4);
    return f;
}

}  // namespace gwr
