#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace gwr {

inline constexpr std::size_t kJointCount = 8;

/// Arm joint angles in radians, ordered
/// [L shoulder pitch, L shoulder yaw, L elbow yaw, L elbow roll,
///  R shoulder pitch, R shoulder yaw, R elbow yaw, R elbow roll].
using Frame = std::array<double, kJointCount>;

enum Joint : std::size_t {
    kLeftShoulderPitch = 0,
    kLeftShoulderYaw,
    kLeftElbowYaw,
    kLeftElbowRoll,
    kRightShoulderPitch,
    kRightShoulderYaw,
    kRightElbowYaw,
    kRightElbowRoll,
};

/// Column names used in sequence files, in Frame order.
const std::array<std::string, kJointCount>& joint_names();

struct JointLimits {
    double lower = -std::numbers::pi;
    double upper = std::numbers::pi;
};

/// A demonstration sampled at a fixed rate. gap_before[i] marks that frames
/// were lost between frame i-1 and frame i; temporal encoders restart there.
struct MotionSequence {
    std::vector<Frame> frames;
    std::vector<std::uint8_t> gap_before;
    double fps = 10.0;
    std::string pattern_label;
    std::string subject_id;

    std::size_t size() const { return frames.size(); }
    bool has_gap_before(std::size_t i) const { return !gap_before.empty() && gap_before[i] != 0; }

    /// Throws if empty, non-finite, outside limits, or gap flags are mis-sized.
    void validate(const JointLimits& limits = {}) const;

    bool operator==(const MotionSequence&) const = default;
};

/// Dimension-agnostic view of a sequence used by the learning hierarchy.
struct FrameSeries {
    std::size_t dim = kJointCount;
    std::vector<double> values;  // row-major, dim per frame
    std::vector<std::uint8_t> gap_before;

    std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const double> frame(std::size_t i) const { return {values.data() + i * dim, dim}; }
    bool has_gap_before(std::size_t i) const { return !gap_before.empty() && gap_before[i] != 0; }

    static FrameSeries from(const MotionSequence& seq);
    static FrameSeries from_rows(const std::vector<std::vector<double>>& rows);
};

/// Component-wise median of consecutive frame triples (30 fps -> 10 fps);
/// a trailing remainder of fewer than three frames is dropped.
MotionSequence median_downsample(std::span<const Frame> raw, double raw_fps = 30.0);

using Vec3 = std::array<double, 3>;

struct ArmPoints {
    Vec3 shoulder{};
    Vec3 elbow{};
    Vec3 hand{};
};

/// Tracked skeleton joints in meters.
struct SkeletonFrame {
    Vec3 torso{};
    Vec3 neck{};
    ArmPoints left;
    ArmPoints right;
};

/// Converts tracked joint positions into the 8 arm angles.
///
/// Convention. A torso frame is built from the anchors: `up` points from
/// torso to neck, `lateral` is the right-to-left shoulder direction with its
/// `up` component removed, and `forward = lateral x up`. For each arm the
/// outward axis is +lateral (left arm) or -lateral (right arm). With the
/// upper-arm vector a = elbow - shoulder expressed as (out, up, fwd):
///   shoulder pitch = atan2(a_fwd, -a_up)        0 hanging, pi/2 forward
///   shoulder yaw   = atan2(a_out, hypot(a_up, a_fwd))   elevation outward
///   elbow roll     = pi - interior elbow angle  0 when the arm is straight
///   elbow yaw      = signed azimuth of the forearm around the upper-arm axis,
///                    measured from the projection of `forward` (or `up` when
///                    the upper arm points forward) onto the plane normal to
///                    the upper arm; 0 when the arm is straight.
/// Throws DomainError on zero-length segments or a degenerate torso frame.
Frame angles_from_skeleton(const SkeletonFrame& skeleton);

}  // namespace gwr
