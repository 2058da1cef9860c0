#pragma once

#include <string>

#include "vsg/gripper_track.hpp"

namespace vsg::sim {

struct GraspSetup {
    GripperGeometry geometry;
    double palm_depth = 0.03;       ///< palm block behind the fingers, along +z of the gripper
    double step = 0.002;            ///< approach increment, meters
    double max_push = 0.02;         ///< larger displacements lose the object
    double friction_margin = 0.005; ///< closing chord may fall short of the diameter by this much
    double lift_height = 0.15;

    void validate() const;
};

struct GraspObject {
    Vec3 base = Vec3::Zero();  ///< center of the bottom face, world frame (axis along +z)
    double radius = 0.03;
    double height = 0.20;
};

enum class GraspResultKind { Held, Failed, Slipped };

struct GraspResult {
    GraspResultKind kind = GraspResultKind::Held;
    bool touched = false;      ///< contact with a finger or the palm before closing
    double pushed = 0.0;       ///< total object displacement during the approach, meters
    Vec3 final_base = Vec3::Zero();
    std::string reason;
};

/// Quasi-static approach from `start` to `end` (true gripper poses), then
/// closing and lifting. The object is pushed out of the finger and palm
/// footprints in the horizontal gripper plane; no dynamics.
GraspResult simulate_grasp(const RigidTransform& start, const RigidTransform& end,
                           const GraspObject& object, double table_height, const GraspSetup& setup);

}  // namespace vsg::sim
