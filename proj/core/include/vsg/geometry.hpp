#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vsg {

/// World frame is right-handed with z up. Units are meters and radians.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct PixelCoord {
    int row = 0;
    int col = 0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Proper rigid motion. The rotation is kept orthonormal with det +1.
class RigidTransform {
public:
    RigidTransform() = default;

    /// Throws std::invalid_argument when `rotation` is not a proper rotation
    /// (orthonormal within 1e-9, det +1) or any component is non-finite.
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform translation_only(const Vec3& t);
    static RigidTransform rot_x(double angle);
    static RigidTransform rot_y(double angle);
    static RigidTransform rot_z(double angle);

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 operator*(const Vec3& p) const { return apply(p); }

    /// `a * b` maps a point through b first, then a.
    RigidTransform operator*(const RigidTransform& other) const;

    RigidTransform inverse() const;

    /// Projects the rotation back onto SO(3); use after long composition chains.
    RigidTransform orthonormalized() const;

    Eigen::Matrix4d matrix() const;

private:
    struct Unchecked {};
    RigidTransform(Unchecked, const Mat3& rotation, const Vec3& translation)
        : rotation_(rotation), translation_(translation) {}

    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

bool is_rotation(const Mat3& r, double tol = 1e-9);

struct Intrinsics {
    double fx = 285.0;
    double fy = 285.0;
    double cx = 160.0;
    double cy = 120.0;
    int width = 320;
    int height = 240;
};

/// Pinhole camera on a pan-tilt mount. The camera frame looks along +z, with
/// +x to the right of the image (columns) and +y downwards (rows).
///
/// camera pose = mount * Rz(pan) * Rx(tilt). The mount's z axis is the pan
/// axis; tilt turns about the panned x axis.
class CameraModel {
public:
    CameraModel() = default;
    CameraModel(const Intrinsics& intrinsics, const RigidTransform& mount, double pan = 0.0,
                double tilt = 0.0);

    const Intrinsics& intrinsics() const { return intr_; }
    const RigidTransform& mount() const { return mount_; }
    double pan() const { return pan_; }
    double tilt() const { return tilt_; }
    int width() const { return intr_.width; }
    int height() const { return intr_.height; }

    /// Camera-in-world pose including the pan-tilt rotation.
    const RigidTransform& pose() const { return pose_; }
    const RigidTransform& world_to_camera() const { return inv_pose_; }

    CameraModel with_pan_tilt(double pan, double tilt) const;
    CameraModel with_mount(const RigidTransform& mount) const;

    /// Pan/tilt that put `target` on the optical axis (tilt >= 0).
    CameraModel aimed_at(const Vec3& target) const;

    bool contains(const PixelCoord& px) const {
        return px.row >= 0 && px.col >= 0 && px.row < intr_.height && px.col < intr_.width;
    }

private:
    void refresh();

    Intrinsics intr_;
    RigidTransform mount_;
    double pan_ = 0.0;
    double tilt_ = 0.0;
    RigidTransform pose_;
    RigidTransform inv_pose_;
};

/// Continuous image coordinates: x = column, y = row, pixel centers at integers.
/// Empty when the point is at or behind the camera plane.
std::optional<Eigen::Vector2d> project_subpixel(const CameraModel& cam, const Vec3& p_world);

/// Nearest pixel of the projection; empty when behind the camera. The result
/// may lie outside the image.
std::optional<PixelCoord> project(const CameraModel& cam, const Vec3& p_world);

/// World point seen at pixel `px` with camera-frame depth `depth_mm` / 1000.
/// Throws std::invalid_argument when depth_mm <= 0.
Vec3 back_project(const CameraModel& cam, const PixelCoord& px, int depth_mm);

/// Same as back_project but in the camera frame, with depth in meters.
inline Vec3 back_project_camera(const Intrinsics& k, double row, double col, double depth_m) {
    return {(col - k.cx) / k.fx * depth_m, (row - k.cy) / k.fy * depth_m, depth_m};
}

}  // namespace vsg
