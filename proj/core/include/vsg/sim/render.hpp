#pragma once

#include <optional>
#include <random>
#include <vector>

#include "vsg/gripper_track.hpp"
#include "vsg/matching.hpp"
#include "vsg/sim/scene.hpp"

namespace vsg::sim {

struct GripperPlacement {
    RigidTransform pose;  ///< true gripper pose, world frame
    GripperGeometry geometry;
};

struct SceneState {
    std::optional<std::size_t> object;  ///< index into World::objects()
    Placement placement;
    std::optional<GripperPlacement> gripper;
};

struct Frame {
    DepthImage depth;
    ColorImage color;
    Mask object_mask;  ///< pixels whose nearest surface is the object
    Mask finger_mask;  ///< pixels whose nearest surface is a finger
    std::vector<Keypoint> keypoints;
};

/// Object-to-world transform for a placement.
RigidTransform object_pose(const Placement& p, double table_height);

/// Ray-cast one RGB-D frame through `cam` (the true camera). Depth noise and
/// descriptor noise are drawn from `rng`.
Frame render(const World& world, const SceneState& state, const CameraModel& cam, std::mt19937_64& rng);

/// Keypoints of a rendered frame, served per region of interest.
class FrameKeypoints final : public DescriptorSource {
public:
    explicit FrameKeypoints(std::vector<Keypoint> keypoints) : kps_(std::move(keypoints)) {}
    std::vector<Keypoint> extract(const Superpixel& roi) const override { return keypoints_in(roi, kps_); }
    const std::vector<Keypoint>& all() const { return kps_; }

private:
    std::vector<Keypoint> kps_;
};

}  // namespace vsg::sim
