#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vsg/gripper_track.hpp"
#include "vsg/sim/render.hpp"

using namespace vsg;

namespace {

CameraModel axis_camera() {
    Intrinsics k;
    k.fx = 300.0;
    k.fy = 300.0;
    k.cx = 160.0;
    k.cy = 120.0;
    return CameraModel(k, RigidTransform::identity());
}

GripperGeometry random_geometry(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.005, 0.1);
    GripperGeometry g;
    g.f_w = u(rng);
    g.g_w = g.f_w + u(rng);
    g.f_t = u(rng);
    g.f_l = u(rng);
    g.eps = u(rng) - 0.005;
    return g;
}

// Covariance after the constant-velocity prediction alone.
Mat6 predicted(const TrackerState& s, double dt) {
    Mat6 f = Mat6::Identity();
    f.topRightCorner<3, 3>() = dt * Mat3::Identity();
    const double q = s.params.process_noise;
    Mat6 qm = Mat6::Zero();
    qm.topLeftCorner<3, 3>() = q * std::pow(dt, 3) / 3.0 * Mat3::Identity();
    qm.topRightCorner<3, 3>() = q * dt * dt / 2.0 * Mat3::Identity();
    qm.bottomLeftCorner<3, 3>() = q * dt * dt / 2.0 * Mat3::Identity();
    qm.bottomRightCorner<3, 3>() = q * dt * Mat3::Identity();
    return f * s.covariance * f.transpose() + qm;
}

// Fingers pointing down, closing along world x.
struct FingerScene {
    sim::World world;
    CameraModel cam;
    RigidTransform pose;
    sim::Frame frame;
};

FingerScene finger_scene(const Vec3& origin, bool with_object, double noise_mm) {
    sim::SceneConfig cfg;
    cfg.depth_noise_mm = noise_mm;
    FingerScene s{sim::World(cfg), {}, RigidTransform::translation_only(origin), {}};
    s.cam = s.world.default_camera();
    sim::SceneState st;
    if (with_object) {
        st.object = 0;
        st.placement = {0.45, 0.0, 0.0};
    }
    st.gripper = sim::GripperPlacement{s.pose, GripperGeometry{}};
    std::mt19937_64 rng(3);
    s.frame = sim::render(s.world, st, s.cam, rng);
    return s;
}

}  // namespace

TEST(FingerSpace, HandExample) {
    GripperGeometry g;
    g.g_w = 0.10;
    g.f_w = 0.02;
    g.f_t = 0.01;
    g.f_l = 0.05;
    g.eps = 0.03;
    const FingerSpace s = finger_space(g, -1);
    EXPECT_NEAR(s.x.lo, -0.09, 1e-15);
    EXPECT_NEAR(s.x.hi, -0.01, 1e-15);
    EXPECT_NEAR(s.y.lo, -0.035, 1e-15);
    EXPECT_NEAR(s.y.hi, 0.035, 1e-15);
    EXPECT_NEAR(s.z.lo, -0.08, 1e-15);
    EXPECT_NEAR(s.z.hi, 0.03, 1e-15);
}

TEST(FingerSpace, ZeroMarginIsNominalVolume) {
    GripperGeometry g;
    g.eps = 0.0;
    for (int side : {-1, 1}) {
        const FingerSpace a = finger_space(g, side);
        const FingerSpace b = finger_volume(g, side);
        EXPECT_EQ(a.x.lo, b.x.lo);
        EXPECT_EQ(a.x.hi, b.x.hi);
        EXPECT_EQ(a.y.lo, b.y.lo);
        EXPECT_EQ(a.z.lo, b.z.lo);
        EXPECT_NEAR(b.x.hi - b.x.lo, g.f_w, 1e-15);
        EXPECT_NEAR(b.z.hi - b.z.lo, g.f_l, 1e-15);
    }
    EXPECT_THROW(finger_space(g, 0), std::invalid_argument);
}

TEST(FingerSpaceProperty, MirrorSymmetry) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const GripperGeometry g = random_geometry(rng);
        const FingerSpace l = finger_space(g, -1);
        const FingerSpace r = finger_space(g, 1);
        EXPECT_NEAR(l.x.lo, -r.x.hi, 1e-15);
        EXPECT_NEAR(l.x.hi, -r.x.lo, 1e-15);
        EXPECT_EQ(l.y.lo, r.y.lo);
        EXPECT_EQ(l.y.hi, r.y.hi);
        EXPECT_EQ(l.z.lo, r.z.lo);
        EXPECT_EQ(l.z.hi, r.z.hi);
        EXPECT_TRUE(l.contains(Vec3(-g.g_w / 2.0, 0.0, -g.f_l / 2.0)));
    }
}

TEST(RoiFromSpace, CenteredBoxIsCenteredOnPrincipalPoint) {
    FingerSpace s;
    s.x = {-0.05, 0.05};
    s.y = {-0.05, 0.05};
    s.z = {-0.05, 0.05};
    const auto roi = roi_from_space(s, RigidTransform::translation_only(Vec3(0, 0, 1)), axis_camera());
    ASSERT_TRUE(roi);
    EXPECT_NEAR((roi->rect.col_min + roi->rect.col_max) / 2.0, 160.0, 1.0);
    EXPECT_NEAR((roi->rect.row_min + roi->rect.row_max) / 2.0, 120.0, 1.0);
}

TEST(RoiFromSpace, MatchesHandProjectedCorners) {
    const sim::World w;
    const CameraModel cam = w.default_camera();
    const GripperGeometry g;
    const RigidTransform pose = RigidTransform::translation_only(Vec3(0.45, 0.05, 0.12));
    const FingerSpace s = finger_space(g, -1);
    const auto roi = roi_from_space(s, pose, cam);
    ASSERT_TRUE(roi);
    const Intrinsics& k = cam.intrinsics();
    double c0 = 1e9;
    double c1 = -1e9;
    double r0 = 1e9;
    double r1 = -1e9;
    for (const Vec3& c : s.corners()) {
        const Vec3 pc = cam.world_to_camera() * (pose * c);
        const double col = k.fx * pc.x() / pc.z() + k.cx;
        const double row = k.fy * pc.y() / pc.z() + k.cy;
        c0 = std::min(c0, col);
        c1 = std::max(c1, col);
        r0 = std::min(r0, row);
        r1 = std::max(r1, row);
    }
    EXPECT_NEAR(roi->rect.col_min, std::max(0.0, c0), 1.0);
    EXPECT_NEAR(roi->rect.col_max, std::min(k.width - 1.0, c1), 1.0);
    EXPECT_NEAR(roi->rect.row_min, std::max(0.0, r0), 1.0);
    EXPECT_NEAR(roi->rect.row_max, std::min(k.height - 1.0, r1), 1.0);
}

TEST(RoiFromSpace, BehindCameraHasNoRegion) {
    const FingerSpace s = finger_space(GripperGeometry{}, 1);
    EXPECT_FALSE(roi_from_space(s, RigidTransform::translation_only(Vec3(0, 0, -1)), axis_camera()));
}

TEST(InsideConvexPolygon, Square) {
    const std::vector<Eigen::Vector2d> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    EXPECT_TRUE(inside_convex_polygon(sq, {0.5, 0.5}));
    EXPECT_FALSE(inside_convex_polygon(sq, {1.5, 0.5}));
}

TEST(DetectFinger, VisibleFingerNearSurfaceCentroid) {
    const FingerScene s = finger_scene(Vec3(0.45, 0.12, 0.15), false, 0.0);
    const GripperGeometry g;
    const FingerSpace space = finger_space(g, -1);
    const FingerDetection d = detect_finger(s.frame.color, s.frame.depth, space, s.pose, s.cam, FingerParams{});
    ASSERT_TRUE(d.detected());
    // Ground truth: visible surface of the near finger from the renderer's finger mask.
    Vec3 sum = Vec3::Zero();
    int n = 0;
    for (int r = 0; r < s.cam.height(); ++r) {
        for (int c = 0; c < s.cam.width(); ++c) {
            if (!s.frame.finger_mask.at(r, c) || s.frame.depth.at(r, c) == 0) {
                continue;
            }
            const Vec3 p = back_project(s.cam, {r, c}, s.frame.depth.at(r, c));
            if ((s.pose.inverse() * p).x() < 0.0) {
                sum += p;
                ++n;
            }
        }
    }
    ASSERT_GT(n, 30);
    EXPECT_LT((d.position - sum / n).norm(), 0.01);
    EXPECT_GE(d.polygon_tested, d.color_tested);
    EXPECT_GE(d.color_tested, d.box_tested);
}

TEST(DetectFinger, OccludedFingerNotDetected) {
    const FingerScene s = finger_scene(Vec3(0.60, 0.0, 0.15), true, 5.0);
    const FingerDetection d =
        detect_finger(s.frame.color, s.frame.depth, finger_space(GripperGeometry{}, -1), s.pose, s.cam, FingerParams{});
    EXPECT_FALSE(d.detected());
}

TEST(DetectFinger, WhiteImageNotDetected) {
    const FingerScene s = finger_scene(Vec3(0.45, 0.12, 0.15), false, 5.0);
    const ColorImage white(s.cam.width(), s.cam.height(), Rgb{255, 255, 255});
    const FingerDetection d =
        detect_finger(white, s.frame.depth, finger_space(GripperGeometry{}, -1), s.pose, s.cam, FingerParams{});
    EXPECT_FALSE(d.detected());
    EXPECT_GT(d.color_tested, 0);
    EXPECT_EQ(d.box_tested, 0);
}

TEST(DetectFinger, DebugImageMarksBoxPixels) {
    const FingerScene s = finger_scene(Vec3(0.45, 0.12, 0.15), false, 0.0);
    const ColorImage dbg =
        finger_debug_image(s.frame.color, s.frame.depth, finger_space(GripperGeometry{}, -1), s.pose, s.cam, FingerParams{});
    long full = 0;
    for (const Rgb& p : dbg.data()) {
        full += (p.r == 255 && p.g == 255 && p.b == 255) ? 1 : 0;
    }
    EXPECT_GT(full, 30);
}

TEST(CombineFingers, Midpoint) {
    GripperGeometry g;
    g.g_w = 0.10;
    const auto v = combine_fingers(Vec3(-0.05, 0, 0), Vec3(0.05, 0, 0), g, Mat3::Identity(), 0.02);
    ASSERT_TRUE(v);
    EXPECT_LT(v->norm(), 1e-15);
}

TEST(CombineFingers, BadSeparationFails) {
    GripperGeometry g;
    g.g_w = 0.10;
    EXPECT_FALSE(combine_fingers(Vec3(-0.05, 0, 0), Vec3(0.09, 0, 0), g, Mat3::Identity(), 0.02));
    EXPECT_FALSE(combine_fingers(std::nullopt, std::nullopt, g, Mat3::Identity(), 0.02));
}

TEST(CombineFingers, SingleFingerOffset) {
    GripperGeometry g;
    g.g_w = 0.10;
    const auto a = combine_fingers(Vec3(1, 2, 3), std::nullopt, g, Mat3::Identity(), 0.02);
    ASSERT_TRUE(a);
    EXPECT_LT((*a - Vec3(1.05, 2, 3)).norm(), 1e-15);
    const Mat3 rz = RigidTransform::rot_z(std::numbers::pi / 2).rotation();
    const auto b = combine_fingers(std::nullopt, Vec3(0, 0, 0), g, rz, 0.02);
    ASSERT_TRUE(b);
    EXPECT_LT((*b - Vec3(0, -0.05, 0)).norm(), 1e-12);
}

TEST(TrackedPoint, BetweenFingerCenters) {
    const GripperGeometry g;
    const RigidTransform pose(RigidTransform::rot_y(0.3).rotation(), Vec3(1, 2, 3));
    const Vec3 a = pose * Vec3(-g.g_w / 2, 0, -g.f_l / 2);
    const Vec3 b = pose * Vec3(g.g_w / 2, 0, -g.f_l / 2);
    EXPECT_LT((tracked_point(pose, g) - (a + b) / 2).norm(), 1e-12);
}

TEST(Kalman, UpdateShrinksPredictedCovariance) {
    TrackerState s = make_tracker(Vec3(0.1, 0.2, 0.3), 0.05, 0.02);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.005);
    for (int i = 0; i < 20; ++i) {
        const double pred = predicted(s, 0.1).trace();
        s = kalman_step(s, 0.1, Vec3(n(rng), n(rng), n(rng)));
        EXPECT_LT(s.uncertainty(), pred);
    }
    EXPECT_LT(s.position().norm(), 0.02);
}

TEST(Kalman, FailureInflatesBeyondPrediction) {
    const TrackerState s = make_tracker(Vec3::Zero(), 0.01, 0.01);
    const double pred = predicted(s, 0.1).trace();
    const TrackerState f = kalman_step(s, 0.1, std::nullopt);
    EXPECT_GT(f.uncertainty(), pred);
    EXPECT_NEAR(f.uncertainty(), s.params.failure_inflation * pred, 1e-15);
}

TEST(Kalman, ExactMeasurementsFixedPoint) {
    TrackerParams p;
    p.process_noise = 0.0;
    TrackerState s = make_tracker(Vec3::Zero(), 0.05, 0.01, p);
    const Vec3 m(0.3, -0.2, 0.1);
    for (int i = 0; i < 200; ++i) {
        s = kalman_step(s, 0.1, m);
    }
    EXPECT_LT((s.position() - m).norm(), 1e-4);
    EXPECT_THROW(kalman_step(s, 0.0, m), std::invalid_argument);
}

TEST(Kalman, CovarianceStaysSymmetricPositive) {
    TrackerState s = make_tracker(Vec3::Zero(), 0.05, 0.02);
    std::mt19937_64 rng(5);
    std::bernoulli_distribution fail(0.3);
    for (int i = 0; i < 500; ++i) {
        s = kalman_step(s, 0.1, fail(rng) ? std::nullopt : std::optional<Vec3>(Vec3::Zero()));
        EXPECT_LT((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_GT(s.covariance.ldlt().vectorD().minCoeff(), 0.0);
    }
}

TEST(Servo, ZeroErrorKeepsCommand) {
    const TrackerState s = make_tracker(Vec3(0.1, 0.1, 0.1), 0.01, 0.01);
    const ServoCommand c = servo_correction(s, Vec3(1, 2, 3), Vec3(0.1, 0.1, 0.1), 1.0);
    ASSERT_TRUE(std::holds_alternative<Vec3>(c));
    EXPECT_LT((std::get<Vec3>(c) - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(Servo, CorrectionOpposesObservedError) {
    const TrackerState s = make_tracker(Vec3(0.03, 0, 0), 0.01, 0.01);
    const ServoCommand c = servo_correction(s, Vec3::Zero(), Vec3::Zero(), 1.0);
    ASSERT_TRUE(std::holds_alternative<Vec3>(c));
    EXPECT_LT((std::get<Vec3>(c) - Vec3(-0.03, 0, 0)).norm(), 1e-15);
}

TEST(Servo, HoldWhenUncertain) {
    const TrackerState s = make_tracker(Vec3(0.2, 0, 0), 0.2, 0.2);
    const ServoCommand c = servo_correction(s, Vec3::Zero(), Vec3::Zero(), 1.0);
    ASSERT_TRUE(std::holds_alternative<Hold>(c));
    EXPECT_EQ(std::get<Hold>(c).look_at, Vec3(0.2, 0, 0));
}
