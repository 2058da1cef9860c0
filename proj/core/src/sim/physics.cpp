#include "vsg/sim/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vsg::sim {
namespace {

struct Rect {
    double x0, x1, z0, z1;
};

// Translation that moves a circle out of a rectangle, or zero when apart.
Eigen::Vector2d separation(const Rect& r, const Eigen::Vector2d& c, double radius) {
    const Eigen::Vector2d near(std::clamp(c.x(), r.x0, r.x1), std::clamp(c.y(), r.z0, r.z1));
    const Eigen::Vector2d d = c - near;
    const double dist = d.norm();
    if (dist >= radius) {
        return Eigen::Vector2d::Zero();
    }
    if (dist > 1e-12) {
        return d / dist * (radius - dist);
    }
    // Center inside the rectangle: leave through the closest side.
    const std::array<double, 4> gaps{c.x() - r.x0, r.x1 - c.x(), c.y() - r.z0, r.z1 - c.y()};
    const auto i = std::min_element(gaps.begin(), gaps.end()) - gaps.begin();
    const double m = gaps[static_cast<std::size_t>(i)] + radius;
    switch (i) {
        case 0: return {-m, 0.0};
        case 1: return {m, 0.0};
        case 2: return {0.0, -m};
        default: return {0.0, m};
    }
}

}  // namespace

void GraspSetup::validate() const {
    geometry.validate();
    if (!(palm_depth > 0.0) || !(step > 0.0) || !(max_push > 0.0) || !(friction_margin >= 0.0)) {
        throw std::invalid_argument("GraspSetup: lengths must be positive");
    }
}

GraspResult simulate_grasp(const RigidTransform& start, const RigidTransform& end,
                           const GraspObject& object, double table_height, const GraspSetup& setup) {
    setup.validate();
    const GripperGeometry& g = setup.geometry;
    const Mat3& rot = end.rotation();
    const double outer = (g.g_w + g.f_w) / 2.0;
    const std::array<Rect, 3> parts{Rect{-g.g_w / 2.0 - g.f_w / 2.0, -g.g_w / 2.0 + g.f_w / 2.0, -g.f_l, 0.0},
                                    Rect{g.g_w / 2.0 - g.f_w / 2.0, g.g_w / 2.0 + g.f_w / 2.0, -g.f_l, 0.0},
                                    Rect{-outer, outer, 0.0, setup.palm_depth}};

    GraspResult res;
    Vec3 base = object.base;
    const double top = object.base.z() + object.height;

    const Vec3 travel = end.translation() - start.translation();
    const int steps = std::max(1, static_cast<int>(std::ceil(travel.norm() / setup.step)));
    for (int i = 0; i <= steps; ++i) {
        const Vec3 t = start.translation() + travel * (static_cast<double>(i) / steps);
        const double lo = t.z() - g.f_t / 2.0;
        const double hi = t.z() + g.f_t / 2.0;
        if (hi <= base.z() || lo >= top) {
            continue;
        }
        for (int iter = 0; iter < 4; ++iter) {
            const Vec3 q = rot.transpose() * (Vec3(base.x(), base.y(), t.z()) - t);
            Eigen::Vector2d c(q.x(), q.z());
            Eigen::Vector2d total = Eigen::Vector2d::Zero();
            for (const auto& part : parts) {
                const Eigen::Vector2d s = separation(part, c, object.radius);
                c += s;
                total += s;
            }
            if (total.squaredNorm() == 0.0) {
                break;
            }
            res.touched = true;
            Vec3 push = rot * Vec3(total.x(), 0.0, total.y());
            push.z() = 0.0;
            base += push;
            res.pushed += push.norm();
        }
    }
    res.final_base = base;

    const Vec3 te = end.translation();
    const Vec3 q = rot.transpose() * (Vec3(base.x(), base.y(), te.z()) - te);
    const double lo = te.z() - g.f_t / 2.0;
    const double hi = te.z() + g.f_t / 2.0;
    const auto fail = [&](GraspResultKind kind, const char* why) {
        res.kind = kind;
        res.reason = why;
        return res;
    };

    if (lo < table_height) {
        return fail(GraspResultKind::Failed, "fingers hit the table");
    }
    if (res.pushed > setup.max_push) {
        return fail(GraspResultKind::Failed, "object pushed away");
    }
    if (lo >= top || hi <= base.z()) {
        return fail(GraspResultKind::Failed, "closed above or below the object");
    }
    if (std::abs(q.x()) >= g.g_w / 2.0 - g.f_w / 2.0) {
        return fail(GraspResultKind::Failed, "object outside the finger gap");
    }
    const double dz = q.z() < -g.f_l ? -g.f_l - q.z() : 0.0;
    if (dz >= object.radius) {
        return fail(GraspResultKind::Failed, "closed on air");
    }
    const double chord = 2.0 * std::sqrt(object.radius * object.radius - dz * dz);
    if (chord < 2.0 * object.radius - setup.friction_margin) {
        return fail(GraspResultKind::Slipped, "held by the fingertips only");
    }
    if (hi > top) {
        return fail(GraspResultKind::Slipped, "held by the top edge only");
    }
    res.kind = GraspResultKind::Held;
    return res;
}

}  // namespace vsg::sim
