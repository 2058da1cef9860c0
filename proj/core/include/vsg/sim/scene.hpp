#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsg/config.hpp"
#include "vsg/geometry.hpp"
#include "vsg/image.hpp"

namespace vsg::sim {

/// Upright textured cylinder. Objects differ by texture seed and diameter.
struct ObjectSpec {
    std::string id;
    double radius = 0.03;
    double height = 0.20;
    std::uint64_t texture_seed = 0;
};

struct SceneConfig {
    Intrinsics intrinsics;
    Vec3 camera_position{-0.25, 0.0, 0.15};   ///< pan-tilt mount, world frame
    Vec3 placement_center{0.45, 0.0, 0.0};    ///< on the table
    double placement_radius = 0.10;
    double table_height = 0.0;
    double object_radius = 0.03;
    double object_height = 0.20;
    int object_count = 5;
    double diameter_spread = 0.2;             ///< other objects vary up to this fraction
    double object_keypoint_density = 4000.0;  ///< per m^2 of surface
    double table_keypoint_density = 300.0;
    double table_keypoint_half_extent = 0.5;  ///< square around the placement center
    int descriptor_length = 16;
    double descriptor_noise = 0.05;
    double depth_noise_mm = 5.0;
    double max_range_m = 4.0;
    Rgb background{185, 170, 150};
    std::uint64_t texture_seed = 7;

    void validate() const;

    /// Mount pose: pan = tilt = 0 looks straight down with image rows along -x.
    RigidTransform camera_mount() const;
    std::vector<ObjectSpec> objects() const;
};

void apply(const Config& c, SceneConfig& s);
void store(Config& c, const SceneConfig& s);

/// Where an object stands: base center on the table and rotation about z.
struct Placement {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

/// Fixed surface point carrying a descriptor, in object or world coordinates.
struct Anchor {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    std::vector<float> descriptor;
};

/// Deterministic descriptor in [-1, 1]^length for a seed and integer surface coordinates.
std::vector<float> hashed_descriptor(std::uint64_t seed, std::int64_t u, std::int64_t v, int length);

std::vector<Anchor> object_anchors(const ObjectSpec& obj, const SceneConfig& cfg);
std::vector<Anchor> table_anchors(const SceneConfig& cfg);

/// Immutable scene content shared by every frame and trial.
class World {
public:
    explicit World(SceneConfig cfg = {});

    const SceneConfig& config() const { return cfg_; }
    const std::vector<ObjectSpec>& objects() const { return objects_; }
    const std::vector<Anchor>& anchors(std::size_t object) const { return object_anchors_.at(object); }
    const std::vector<Anchor>& table() const { return table_anchors_; }

    /// Camera aimed at a point 0.1 m above the placement center.
    CameraModel default_camera() const;

private:
    SceneConfig cfg_;
    std::vector<ObjectSpec> objects_;
    std::vector<std::vector<Anchor>> object_anchors_;
    std::vector<Anchor> table_anchors_;
};

}  // namespace vsg::sim
