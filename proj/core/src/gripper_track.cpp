#include "vsg/gripper_track.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace vsg {

void GripperGeometry::validate() const {
    if (!(g_w > 0.0 && f_w > 0.0 && f_t > 0.0 && f_l > 0.0 && eps >= 0.0)) {
        throw std::invalid_argument("GripperGeometry: dimensions must be positive");
    }
    if (f_w >= g_w) {
        throw std::invalid_argument("GripperGeometry: fingers overlap (f_w >= g_w)");
    }
}

std::vector<Vec3> FingerSpace::corners() const {
    std::vector<Vec3> out;
    out.reserve(8);
    for (double cx : {x.lo, x.hi}) {
        for (double cy : {y.lo, y.hi}) {
            for (double cz : {z.lo, z.hi}) {
                out.emplace_back(cx, cy, cz);
            }
        }
    }
    return out;
}

namespace {

FingerSpace box(const GripperGeometry& geom, int side, double eps) {
    if (side != -1 && side != 1) {
        throw std::invalid_argument("finger_space: side must be -1 or +1");
    }
    geom.validate();
    const double s = static_cast<double>(side);
    FingerSpace f;
    f.side = side;
    f.x = {(s * geom.g_w - geom.f_w) / 2.0 - eps, (s * geom.g_w + geom.f_w) / 2.0 + eps};
    f.y = {-geom.f_t / 2.0 - eps, geom.f_t / 2.0 + eps};
    f.z = {-geom.f_l - eps, eps};
    return f;
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain, counter-clockwise in (x, y).
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    if (pts.size() < 3) {
        return pts;
    }
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) {
            --k;
        }
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) {
            --k;
        }
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

bool is_black(const Rgb& c, int thr) { return c.r < thr && c.g < thr && c.b < thr; }

}  // namespace

FingerSpace finger_space(const GripperGeometry& geom, int side) { return box(geom, side, geom.eps); }

FingerSpace finger_volume(const GripperGeometry& geom, int side) { return box(geom, side, 0.0); }

std::optional<FingerRoi> roi_from_space(const FingerSpace& space, const RigidTransform& gripper_pose,
                                        const CameraModel& cam) {
    std::vector<Eigen::Vector2d> pts;
    for (const Vec3& c : space.corners()) {
        if (auto p = project_subpixel(cam, gripper_pose * c)) {
            pts.push_back(*p);
        }
    }
    if (pts.empty()) {
        return std::nullopt;
    }
    FingerRoi roi;
    roi.polygon = convex_hull(pts);
    double x0 = pts.front().x();
    double x1 = x0;
    double y0 = pts.front().y();
    double y1 = y0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
    }
    const int c0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int c1 = std::min(cam.width() - 1, static_cast<int>(std::ceil(x1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int r1 = std::min(cam.height() - 1, static_cast<int>(std::ceil(y1)));
    if (c0 > c1 || r0 > r1) {
        return std::nullopt;
    }
    roi.rect = PixelRect{r0, c0, r1, c1};
    return roi;
}

bool inside_convex_polygon(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& p) {
    if (polygon.size() < 3) {
        return false;
    }
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % polygon.size()];
        if (cross(a, b, p) < 0.0) {
            return false;
        }
    }
    return true;
}

namespace {

struct Survivors {
    std::optional<FingerRoi> roi;
    Mask mask;                 // rect-sized
    std::vector<Vec3> points;  // world point per rect cell, valid where mask is set
};

void check_shapes(const ColorImage& color, const DepthImage& depth, const CameraModel& cam) {
    if (color.width() != cam.width() || color.height() != cam.height() ||
        depth.width() != cam.width() || depth.height() != cam.height()) {
        throw std::invalid_argument("detect_finger: image size differs from the camera");
    }
}

}  // namespace

FingerDetection detect_finger(const ColorImage& color, const DepthImage& depth,
                              const FingerSpace& space, const RigidTransform& gripper_pose,
                              const CameraModel& cam, const FingerParams& params) {
    check_shapes(color, depth, cam);
    FingerDetection det;
    const auto roi = roi_from_space(space, gripper_pose, cam);
    if (!roi) {
        det.status = FingerStatus::NoVisibleRegion;
        return det;
    }
    const PixelRect& r = roi->rect;
    const int w = r.col_max - r.col_min + 1;
    const int h = r.row_max - r.row_min + 1;
    Mask keep(w, h, 0);
    std::vector<Vec3> world(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    const RigidTransform to_gripper = gripper_pose.inverse();

    for (int row = r.row_min; row <= r.row_max; ++row) {
        for (int col = r.col_min; col <= r.col_max; ++col) {
            ++det.polygon_tested;
            if (!inside_convex_polygon(roi->polygon, {static_cast<double>(col), static_cast<double>(row)})) {
                continue;
            }
            ++det.color_tested;
            if (!is_black(color.at(row, col), params.black_threshold)) {
                continue;
            }
            const int d = depth.at(row, col);
            if (d <= 0) {
                continue;
            }
            ++det.box_tested;
            const Vec3 p = back_project(cam, {row, col}, d);
            if (space.contains(to_gripper * p)) {
                const int lr = row - r.row_min;
                const int lc = col - r.col_min;
                keep.at(lr, lc) = 1;
                world[static_cast<std::size_t>(keep.index(lr, lc))] = p;
            }
        }
    }

    int count = 0;
    const Image<int> labels = label_components(keep, &count);
    if (count == 0) {
        return det;
    }
    std::vector<int> sizes(static_cast<std::size_t>(count), 0);
    for (int v : labels.data()) {
        if (v >= 0) {
            ++sizes[static_cast<std::size_t>(v)];
        }
    }
    const auto best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    det.pixels = sizes[static_cast<std::size_t>(best)];
    if (det.pixels < params.min_pixels) {
        return det;
    }
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < labels.data().size(); ++i) {
        if (labels.data()[i] == best) {
            sum += world[i];
        }
    }
    det.position = sum / static_cast<double>(det.pixels);
    det.status = FingerStatus::Detected;
    return det;
}

ColorImage finger_debug_image(const ColorImage& color, const DepthImage& depth,
                              const FingerSpace& space, const RigidTransform& gripper_pose,
                              const CameraModel& cam, const FingerParams& params) {
    check_shapes(color, depth, cam);
    ColorImage out(cam.width(), cam.height(), Rgb{0, 0, 0});
    const auto roi = roi_from_space(space, gripper_pose, cam);
    if (!roi) {
        return out;
    }
    const RigidTransform to_gripper = gripper_pose.inverse();
    const PixelRect& r = roi->rect;
    for (int row = r.row_min; row <= r.row_max; ++row) {
        for (int col = r.col_min; col <= r.col_max; ++col) {
            if (!inside_convex_polygon(roi->polygon, {static_cast<double>(col), static_cast<double>(row)}) ||
                !is_black(color.at(row, col), params.black_threshold) || depth.at(row, col) <= 0) {
                continue;
            }
            const Vec3 g = to_gripper * back_project(cam, {row, col}, depth.at(row, col));
            Rgb& px = out.at(row, col);
            px.b = space.x.contains(g.x()) ? 255 : 0;
            px.g = space.y.contains(g.y()) ? 255 : 0;
            px.r = space.z.contains(g.z()) ? 255 : 0;
        }
    }
    return out;
}

Vec3 tracked_point(const RigidTransform& gripper_pose, const GripperGeometry& geom) {
    return gripper_pose * Vec3(0.0, 0.0, -geom.f_l / 2.0);
}

std::optional<Vec3> combine_fingers(const std::optional<Vec3>& f1, const std::optional<Vec3>& f2,
                                    const GripperGeometry& geom, const Mat3& orientation,
                                    double tolerance) {
    if (f1 && f2) {
        if (std::abs((*f1 - *f2).norm() - geom.g_w) <= tolerance) {
            return Vec3((*f1 + *f2) / 2.0);
        }
        return std::nullopt;
    }
    if (f1) {
        return Vec3(*f1 + orientation * Vec3(geom.g_w / 2.0, 0.0, 0.0));
    }
    if (f2) {
        return Vec3(*f2 + orientation * Vec3(-geom.g_w / 2.0, 0.0, 0.0));
    }
    return std::nullopt;
}

void TrackerParams::validate() const {
    if (!(process_noise >= 0.0) || !(measurement_sigma > 0.0)) {
        throw std::invalid_argument("TrackerParams: noise levels must be non-negative");
    }
    if (!(failure_inflation > 1.0)) {
        throw std::invalid_argument("TrackerParams: failure_inflation must exceed 1");
    }
    if (!(uncertainty_threshold > 0.0) || !(finger_tolerance >= 0.0) || !(gain > 0.0)) {
        throw std::invalid_argument("TrackerParams: threshold, tolerance and gain must be positive");
    }
    if (black_threshold < 1 || black_threshold > 256 || min_pixels < 1) {
        throw std::invalid_argument("TrackerParams: bad pixel filter settings");
    }
}

TrackerState make_tracker(const Vec3& position, double position_sigma, double velocity_sigma,
                          const TrackerParams& params) {
    params.validate();
    if (!(position_sigma > 0.0) || !(velocity_sigma > 0.0)) {
        throw std::invalid_argument("make_tracker: initial sigmas must be positive");
    }
    TrackerState s;
    s.params = params;
    s.mean.head<3>() = position;
    s.mean.tail<3>().setZero();
    s.covariance.setZero();
    s.covariance.topLeftCorner<3, 3>().diagonal().setConstant(position_sigma * position_sigma);
    s.covariance.bottomRightCorner<3, 3>().diagonal().setConstant(velocity_sigma * velocity_sigma);
    return s;
}

TrackerState kalman_step(const TrackerState& state, double dt, const std::optional<Vec3>& measurement) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("kalman_step: dt must be positive");
    }
    const TrackerParams& p = state.params;
    Mat6 f = Mat6::Identity();
    f.topRightCorner<3, 3>() = Mat3::Identity() * dt;

    // White-acceleration process noise.
    const double q = p.process_noise;
    Mat6 qm = Mat6::Zero();
    qm.topLeftCorner<3, 3>() = Mat3::Identity() * (q * dt * dt * dt / 3.0);
    qm.topRightCorner<3, 3>() = Mat3::Identity() * (q * dt * dt / 2.0);
    qm.bottomLeftCorner<3, 3>() = Mat3::Identity() * (q * dt * dt / 2.0);
    qm.bottomRightCorner<3, 3>() = Mat3::Identity() * (q * dt);

    TrackerState next = state;
    next.mean = f * state.mean;
    next.covariance = f * state.covariance * f.transpose() + qm;

    if (!measurement) {
        next.covariance *= p.failure_inflation;
    } else {
        Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
        h.leftCols<3>().setIdentity();
        const Mat3 r = Mat3::Identity() * (p.measurement_sigma * p.measurement_sigma);
        const Mat3 s = h * next.covariance * h.transpose() + r;
        const Eigen::Matrix<double, 6, 3> k =
            s.ldlt().solve(h * next.covariance.transpose()).transpose();
        next.mean += k * (*measurement - h * next.mean);
        // Joseph form keeps the covariance positive-definite under rounding.
        const Mat6 a = Mat6::Identity() - k * h;
        next.covariance = a * next.covariance * a.transpose() + k * r * k.transpose();
    }
    next.covariance = (next.covariance + next.covariance.transpose()) / 2.0;
    return next;
}

ServoCommand servo_correction(const TrackerState& state, const Vec3& commanded_target,
                              const Vec3& model_position, double gain) {
    if (state.uncertainty() > state.params.uncertainty_threshold) {
        return Hold{state.position()};
    }
    return Vec3(commanded_target + gain * (model_position - state.position()));
}

}  // namespace vsg
