#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "vsg/depth_seg.hpp"
#include "vsg/geometry.hpp"
#include "vsg/image.hpp"

namespace vsg {

/// Two-finger gripper dimensions in meters. In the gripper frame the fingers
/// sit at x = ±g_w/2 and extend from the palm (z = 0) to the tips (z = -f_l).
struct GripperGeometry {
    double g_w = 0.12;  ///< finger center-to-center distance when open
    double f_w = 0.016; ///< finger width along x
    double f_t = 0.012; ///< finger thickness along y
    double f_l = 0.07;  ///< finger length along -z
    double eps = 0.06;  ///< maximal accepted arm error

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Box in the gripper frame where finger `side` (-1 or +1) must lie.
struct FingerSpace {
    int side = -1;
    Interval x;
    Interval y;
    Interval z;

    bool contains(const Vec3& p_gripper) const {
        return x.contains(p_gripper.x()) && y.contains(p_gripper.y()) && z.contains(p_gripper.z());
    }
    std::vector<Vec3> corners() const;
};

/// Nominal finger box widened by eps on every face. Throws
/// std::invalid_argument unless side is -1 or +1.
FingerSpace finger_space(const GripperGeometry& geom, int side);

/// Nominal finger box (no margin).
FingerSpace finger_volume(const GripperGeometry& geom, int side);

struct FingerRoi {
    std::vector<Eigen::Vector2d> polygon;  ///< convex hull of the projected corners, (col, row)
    PixelRect rect;                        ///< polygon bounds clipped to the image
};

/// Empty when no corner projects in front of the camera or the bounds miss the image.
std::optional<FingerRoi> roi_from_space(const FingerSpace& space, const RigidTransform& gripper_pose,
                                        const CameraModel& cam);

bool inside_convex_polygon(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& p);

struct FingerParams {
    int black_threshold = 50;
    int min_pixels = 30;
};

enum class FingerStatus { Detected, NotDetected, NoVisibleRegion };

struct FingerDetection {
    FingerStatus status = FingerStatus::NotDetected;
    Vec3 position = Vec3::Zero();  ///< world frame, valid when Detected
    int pixels = 0;                ///< size of the retained superpixel
    // Pixels reaching each filter stage, cheapest first.
    int polygon_tested = 0;
    int color_tested = 0;
    int box_tested = 0;

    bool detected() const { return status == FingerStatus::Detected; }
};

/// Finger position from the pixels that fall inside the projected space, are
/// black, and back-project into the 3-D box; the largest 4-connected group is
/// averaged. `gripper_pose` is the pose reported by the arm controller.
FingerDetection detect_finger(const ColorImage& color, const DepthImage& depth,
                              const FingerSpace& space, const RigidTransform& gripper_pose,
                              const CameraModel& cam, const FingerParams& params);

/// Space-check visualisation: blue, green and red are saturated when the
/// back-projected pixel satisfies the x, y and z range of `space`. Pixels
/// outside the projected polygon or failing the color test stay black.
ColorImage finger_debug_image(const ColorImage& color, const DepthImage& depth,
                              const FingerSpace& space, const RigidTransform& gripper_pose,
                              const CameraModel& cam, const FingerParams& params);

/// Gripper reference point tracked by vision: midway between the finger centers.
Vec3 tracked_point(const RigidTransform& gripper_pose, const GripperGeometry& geom);

/// Gripper reference point from the finger detections (f1 is side -1, f2 side +1).
/// A single finger is shifted by its model offset rotated by `orientation`;
/// two fingers must be g_w apart within `tolerance`. Empty means detection failure.
std::optional<Vec3> combine_fingers(const std::optional<Vec3>& f1, const std::optional<Vec3>& f2,
                                    const GripperGeometry& geom, const Mat3& orientation,
                                    double tolerance);

struct TrackerParams {
    double process_noise = 0.01;         ///< acceleration noise density, m^2/s^3
    double measurement_sigma = 0.005;    ///< m
    double failure_inflation = 2.0;
    double uncertainty_threshold = 0.01; ///< covariance trace, m^2
    int black_threshold = 50;
    int min_pixels = 30;
    double finger_tolerance = 0.02;      ///< m
    double gain = 1.0;

    void validate() const;
    FingerParams finger_params() const { return {black_threshold, min_pixels}; }
};

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Constant-velocity Kalman state: position then velocity.
struct TrackerState {
    Vec6 mean = Vec6::Zero();
    Mat6 covariance = Mat6::Identity();
    TrackerParams params;

    Vec3 position() const { return mean.head<3>(); }
    Vec3 velocity() const { return mean.tail<3>(); }
    double uncertainty() const { return covariance.trace(); }
};

TrackerState make_tracker(const Vec3& position, double position_sigma, double velocity_sigma,
                          const TrackerParams& params = {});

/// Predict over dt, then either fuse the position measurement or, on a
/// detection failure (empty), inflate the predicted covariance.
/// Throws std::invalid_argument unless dt > 0.
TrackerState kalman_step(const TrackerState& state, double dt,
                         const std::optional<Vec3>& measurement);

struct Hold {
    Vec3 look_at = Vec3::Zero();  ///< where the camera should point meanwhile
};

using ServoCommand = std::variant<Vec3, Hold>;

/// target + gain * (model_position - estimate), or Hold when the covariance
/// trace exceeds the uncertainty threshold.
ServoCommand servo_correction(const TrackerState& state, const Vec3& commanded_target,
                              const Vec3& model_position, double gain);

}  // namespace vsg
