#include "vsg/sim/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace vsg::sim {
namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

enum class Surface : std::uint8_t { None, Table, Object, Finger };

struct Hit {
    double t = kNoHit;
    Surface surface = Surface::None;
    Vec3 local = Vec3::Zero();  // object-frame point for texturing
};

std::uint64_t cell_hash(std::int64_t a, std::int64_t b, std::uint64_t seed) {
    std::uint64_t x = seed ^ (static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL) ^
                      (static_cast<std::uint64_t>(b) * 0xc2b2ae3d27d4eb4fULL);
    x = (x ^ (x >> 31)) * 0xbf58476d1ce4e5b9ULL;
    return x ^ (x >> 29);
}

std::uint8_t shade(int base, std::uint64_t h, int amplitude) {
    const int v = base + static_cast<int>(h % static_cast<std::uint64_t>(2 * amplitude + 1)) - amplitude;
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

// Slab test against an axis-aligned box; returns the entry distance.
double ray_box(const Vec3& o, const Vec3& d, const FingerSpace& b) {
    double t0 = 0.0;
    double t1 = kNoHit;
    const std::array<Interval, 3> r{b.x, b.y, b.z};
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (o[i] < r[static_cast<std::size_t>(i)].lo || o[i] > r[static_cast<std::size_t>(i)].hi) {
                return kNoHit;
            }
            continue;
        }
        double a = (r[static_cast<std::size_t>(i)].lo - o[i]) / d[i];
        double c = (r[static_cast<std::size_t>(i)].hi - o[i]) / d[i];
        if (a > c) {
            std::swap(a, c);
        }
        t0 = std::max(t0, a);
        t1 = std::min(t1, c);
        if (t0 > t1) {
            return kNoHit;
        }
    }
    return t0 > 0.0 ? t0 : kNoHit;
}

}  // namespace

RigidTransform object_pose(const Placement& p, double table_height) {
    const RigidTransform r = RigidTransform::rot_z(p.yaw);
    return {r.rotation(), Vec3(p.x, p.y, table_height)};
}

Frame render(const World& world, const SceneState& state, const CameraModel& cam, std::mt19937_64& rng) {
    const SceneConfig& cfg = world.config();
    const Intrinsics& k = cam.intrinsics();
    const int w = k.width;
    const int h = k.height;
    Frame f{DepthImage(w, h, 0), ColorImage(w, h), Mask(w, h, 0), Mask(w, h, 0), {}};
    std::vector<double> zbuf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kNoHit);

    const Vec3 c = cam.pose().translation();
    const Mat3& rc = cam.pose().rotation();

    const ObjectSpec* obj = state.object ? &world.objects().at(*state.object) : nullptr;
    const RigidTransform opose = object_pose(state.placement, cfg.table_height);
    const RigidTransform oinv = opose.inverse();

    std::optional<RigidTransform> ginv;
    std::array<FingerSpace, 2> fingers{};
    if (state.gripper) {
        ginv = state.gripper->pose.inverse();
        fingers = {finger_volume(state.gripper->geometry, -1), finger_volume(state.gripper->geometry, 1)};
    }
    const Vec3 c_obj = oinv * c;
    const Vec3 c_grip = ginv ? Vec3(*ginv * c) : Vec3::Zero();

    std::normal_distribution<double> noise(0.0, std::max(cfg.depth_noise_mm, 1e-300));
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            // Camera-frame direction with unit z, so t is the depth.
            const Vec3 dc((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0);
            const Vec3 d = rc * dc;
            Hit best;

            if (d.z() < 0.0) {
                const double t = (cfg.table_height - c.z()) / d.z();
                if (t > 0.0) {
                    best = {t, Surface::Table, c + t * d};
                }
            }
            if (obj) {
                const Vec3 dl = oinv.rotation() * d;
                const double a = dl.x() * dl.x() + dl.y() * dl.y();
                if (a > 0.0) {
                    const double b = 2.0 * (c_obj.x() * dl.x() + c_obj.y() * dl.y());
                    const double cc = c_obj.x() * c_obj.x() + c_obj.y() * c_obj.y() - obj->radius * obj->radius;
                    const double disc = b * b - 4.0 * a * cc;
                    if (disc >= 0.0) {
                        const double t = (-b - std::sqrt(disc)) / (2.0 * a);
                        const double z = c_obj.z() + t * dl.z();
                        if (t > 0.0 && t < best.t && z >= 0.0 && z <= obj->height) {
                            best = {t, Surface::Object, c_obj + t * dl};
                        }
                    }
                }
                if (dl.z() < 0.0) {
                    const double t = (obj->height - c_obj.z()) / dl.z();
                    const Vec3 p = c_obj + t * dl;
                    if (t > 0.0 && t < best.t && p.head<2>().squaredNorm() <= obj->radius * obj->radius) {
                        best = {t, Surface::Object, p};
                    }
                }
            }
            if (ginv) {
                const Vec3 dg = ginv->rotation() * d;
                for (const auto& fb : fingers) {
                    const double t = ray_box(c_grip, dg, fb);
                    if (t < best.t) {
                        best = {t, Surface::Finger, Vec3::Zero()};
                    }
                }
            }

            const std::size_t idx = f.depth.index(row, col);
            Rgb& px = f.color.data()[idx];
            switch (best.surface) {
                case Surface::None:
                    px = cfg.background;
                    break;
                case Surface::Table: {
                    const auto hsh = cell_hash(static_cast<std::int64_t>(std::floor(best.local.x() / 0.01)),
                                               static_cast<std::int64_t>(std::floor(best.local.y() / 0.01)),
                                               cfg.texture_seed);
                    px = {shade(cfg.background.r, hsh, 20), shade(cfg.background.g, hsh, 20),
                          shade(cfg.background.b, hsh, 20)};
                    break;
                }
                case Surface::Object: {
                    const double phi = std::atan2(best.local.y(), best.local.x());
                    const auto hsh = cell_hash(static_cast<std::int64_t>(std::floor(phi * obj->radius / 0.005)),
                                               static_cast<std::int64_t>(std::floor(best.local.z() / 0.005)),
                                               obj->texture_seed);
                    const std::uint8_t g = shade(135, hsh, 25);
                    px = {g, g, g};
                    f.object_mask.data()[idx] = 1;
                    break;
                }
                case Surface::Finger:
                    px = {25, 25, 28};
                    f.finger_mask.data()[idx] = 1;
                    break;
            }
            if (best.surface != Surface::None && best.t <= cfg.max_range_m) {
                zbuf[idx] = best.t;
                const double mm = best.t * 1000.0 + (cfg.depth_noise_mm > 0.0 ? noise(rng) : 0.0);
                f.depth.data()[idx] =
                    static_cast<std::uint16_t>(std::clamp<long>(std::lround(mm), 1, kMaxDepthMm - 1));
            }
        }
    }

    // Keypoints: front-facing, inside the image, and the nearest surface at their pixel.
    std::normal_distribution<double> dnoise(0.0, std::max(cfg.descriptor_noise, 1e-300));
    const bool noisy = cfg.descriptor_noise > 0.0;
    const RigidTransform& w2c = cam.world_to_camera();
    const auto observe = [&](const Anchor& a, const RigidTransform& pose) {
        const Vec3 p = pose * a.point;
        const Vec3 n = pose.rotation() * a.normal;
        const Vec3 v = c - p;
        if (n.dot(v) < 0.25 * v.norm()) {
            return;
        }
        const Vec3 pc = w2c * p;
        if (pc.z() <= 0.0) {
            return;
        }
        const int col = static_cast<int>(std::lround(k.fx * pc.x() / pc.z() + k.cx));
        const int row = static_cast<int>(std::lround(k.fy * pc.y() / pc.z() + k.cy));
        if (row < 0 || col < 0 || row >= h || col >= w) {
            return;
        }
        if (std::abs(zbuf[f.depth.index(row, col)] - pc.z()) > 0.008) {
            return;
        }
        Keypoint kp;
        kp.px = {row, col};
        kp.scale = 1.0f;
        kp.descriptor.resize(a.descriptor.size());
        for (std::size_t i = 0; i < a.descriptor.size(); ++i) {
            kp.descriptor[i] = a.descriptor[i] + (noisy ? static_cast<float>(dnoise(rng)) : 0.0f);
        }
        f.keypoints.push_back(std::move(kp));
    };
    if (obj) {
        for (const auto& a : world.anchors(*state.object)) {
            observe(a, opose);
        }
    }
    for (const auto& a : world.table()) {
        observe(a, RigidTransform::identity());
    }
    return f;
}

}  // namespace vsg::sim
