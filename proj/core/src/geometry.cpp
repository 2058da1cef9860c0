#include "vsg/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace vsg {

bool is_rotation(const Mat3& r, double tol) {
    if (!r.allFinite()) {
        return false;
    }
    if (((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    return std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
    if (!is_rotation(rotation_)) {
        throw std::invalid_argument("RigidTransform: rotation is not orthonormal with det +1");
    }
    if (!translation_.allFinite()) {
        throw std::invalid_argument("RigidTransform: non-finite translation");
    }
}

RigidTransform RigidTransform::translation_only(const Vec3& t) {
    return RigidTransform(Mat3::Identity(), t);
}

RigidTransform RigidTransform::rot_x(double angle) {
    return {Unchecked{}, Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::rot_y(double angle) {
    return {Unchecked{}, Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::rot_z(double angle) {
    return {Unchecked{}, Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
    return {Unchecked{}, rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

RigidTransform RigidTransform::inverse() const {
    Mat3 rt = rotation_.transpose();
    return {Unchecked{}, rt, -(rt * translation_)};
}

RigidTransform RigidTransform::orthonormalized() const {
    Eigen::JacobiSVD<Mat3> svd(rotation_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Mat3 u = svd.matrixU();
        u.col(2) = -u.col(2);
        r = u * svd.matrixV().transpose();
    }
    return {Unchecked{}, r, translation_};
}

Eigen::Matrix4d RigidTransform::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

CameraModel::CameraModel(const Intrinsics& intrinsics, const RigidTransform& mount, double pan,
                         double tilt)
    : intr_(intrinsics), mount_(mount), pan_(pan), tilt_(tilt) {
    if (!(intr_.fx > 0.0) || !(intr_.fy > 0.0)) {
        throw std::invalid_argument("CameraModel: focal lengths must be positive");
    }
    if (intr_.width <= 0 || intr_.height <= 0 || intr_.cx < 0.0 || intr_.cy < 0.0 ||
        intr_.cx >= intr_.width || intr_.cy >= intr_.height) {
        throw std::invalid_argument("CameraModel: principal point outside the image");
    }
    refresh();
}

void CameraModel::refresh() {
    pose_ = mount_ * RigidTransform::rot_z(pan_) * RigidTransform::rot_x(tilt_);
    inv_pose_ = pose_.inverse();
}

CameraModel CameraModel::with_pan_tilt(double pan, double tilt) const {
    CameraModel c = *this;
    c.pan_ = pan;
    c.tilt_ = tilt;
    c.refresh();
    return c;
}

CameraModel CameraModel::with_mount(const RigidTransform& mount) const {
    CameraModel c = *this;
    c.mount_ = mount;
    c.refresh();
    return c;
}

CameraModel CameraModel::aimed_at(const Vec3& target) const {
    // Rz(pan) * Rx(tilt) * e_z = (sin p sin t, -cos p sin t, cos t) in the mount frame.
    Vec3 d = mount_.inverse().apply(target);
    const double n = d.norm();
    if (n <= 0.0) {
        return *this;
    }
    d /= n;
    const double horiz = std::hypot(d.x(), d.y());
    const double tilt = std::atan2(horiz, d.z());
    const double pan = horiz > 1e-12 ? std::atan2(d.x(), -d.y()) : pan_;
    return with_pan_tilt(pan, tilt);
}

std::optional<Eigen::Vector2d> project_subpixel(const CameraModel& cam, const Vec3& p_world) {
    const Vec3 pc = cam.world_to_camera().apply(p_world);
    if (pc.z() <= 0.0) {
        return std::nullopt;
    }
    const auto& k = cam.intrinsics();
    return Eigen::Vector2d(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
}

std::optional<PixelCoord> project(const CameraModel& cam, const Vec3& p_world) {
    auto uv = project_subpixel(cam, p_world);
    if (!uv) {
        return std::nullopt;
    }
    return PixelCoord{static_cast<int>(std::lround(uv->y())), static_cast<int>(std::lround(uv->x()))};
}

Vec3 back_project(const CameraModel& cam, const PixelCoord& px, int depth_mm) {
    if (depth_mm <= 0) {
        throw std::invalid_argument("back_project: depth must be positive");
    }
    const Vec3 pc = back_project_camera(cam.intrinsics(), px.row, px.col, depth_mm / 1000.0);
    return cam.pose().apply(pc);
}

}  // namespace vsg
