#include "vsg/sim/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vsg::sim {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Integer surface coordinate at 0.1 mm resolution.
std::int64_t quantize(double v) { return static_cast<std::int64_t>(std::llround(v * 1e4)); }

}  // namespace

void SceneConfig::validate() const {
    if (intrinsics.width < 16 || intrinsics.height < 16 || !(intrinsics.fx > 0.0) ||
        !(intrinsics.fy > 0.0)) {
        throw std::invalid_argument("SceneConfig: bad intrinsics");
    }
    if (!(placement_radius >= 0.0) || !(object_radius > 0.0) || !(object_height > 0.0)) {
        throw std::invalid_argument("SceneConfig: object dimensions must be positive");
    }
    if (object_count < 1 || !(diameter_spread >= 0.0 && diameter_spread < 1.0)) {
        throw std::invalid_argument("SceneConfig: bad object set");
    }
    if (!(object_keypoint_density >= 0.0) || !(table_keypoint_density >= 0.0) ||
        descriptor_length < 1 || !(descriptor_noise >= 0.0)) {
        throw std::invalid_argument("SceneConfig: bad keypoint settings");
    }
    if (!(depth_noise_mm >= 0.0) || !(max_range_m > 0.0) || max_range_m * 1000.0 >= kMaxDepthMm) {
        throw std::invalid_argument("SceneConfig: bad depth sensor settings");
    }
    if (!(camera_position.z() > table_height)) {
        throw std::invalid_argument("SceneConfig: camera must be above the table");
    }
}

RigidTransform SceneConfig::camera_mount() const {
    Mat3 r;
    r << 0.0, -1.0, 0.0,
        -1.0, 0.0, 0.0,
        0.0, 0.0, -1.0;
    return {r, camera_position};
}

std::vector<ObjectSpec> SceneConfig::objects() const {
    // Target first, the others alternate below and above its diameter.
    std::vector<ObjectSpec> out;
    for (int i = 0; i < object_count; ++i) {
        const int step = (i + 1) / 2;
        const int half = object_count / 2;
        const double sign = i % 2 == 1 ? -1.0 : 1.0;
        const double frac = half > 0 ? static_cast<double>(step) / half : 0.0;
        ObjectSpec o;
        o.id = "obj" + std::to_string(i);
        o.radius = object_radius * (1.0 + sign * diameter_spread * frac);
        o.height = object_height;
        o.texture_seed = splitmix(texture_seed + 1000 * static_cast<std::uint64_t>(i + 1));
        out.push_back(o);
    }
    return out;
}

void apply(const Config& c, SceneConfig& s) {
    c.read("camera.fx", s.intrinsics.fx);
    c.read("camera.fy", s.intrinsics.fy);
    c.read("camera.cx", s.intrinsics.cx);
    c.read("camera.cy", s.intrinsics.cy);
    c.read("camera.width", s.intrinsics.width);
    c.read("camera.height", s.intrinsics.height);
    c.read("camera.x", s.camera_position.x());
    c.read("camera.y", s.camera_position.y());
    c.read("camera.z", s.camera_position.z());
    c.read("scene.placement_x", s.placement_center.x());
    c.read("scene.placement_y", s.placement_center.y());
    c.read("scene.placement_radius", s.placement_radius);
    c.read("scene.table_height", s.table_height);
    c.read("scene.object_radius", s.object_radius);
    c.read("scene.object_height", s.object_height);
    c.read("scene.object_count", s.object_count);
    c.read("scene.diameter_spread", s.diameter_spread);
    c.read("scene.object_keypoint_density", s.object_keypoint_density);
    c.read("scene.table_keypoint_density", s.table_keypoint_density);
    c.read("scene.descriptor_length", s.descriptor_length);
    c.read("scene.descriptor_noise", s.descriptor_noise);
    c.read("scene.depth_noise_mm", s.depth_noise_mm);
    c.read("scene.max_range_m", s.max_range_m);
    c.read("scene.texture_seed", s.texture_seed);
    s.placement_center.z() = s.table_height;
    s.validate();
}

void store(Config& c, const SceneConfig& s) {
    c.set("camera.fx", s.intrinsics.fx);
    c.set("camera.fy", s.intrinsics.fy);
    c.set("camera.cx", s.intrinsics.cx);
    c.set("camera.cy", s.intrinsics.cy);
    c.set("camera.width", s.intrinsics.width);
    c.set("camera.height", s.intrinsics.height);
    c.set("camera.x", s.camera_position.x());
    c.set("camera.y", s.camera_position.y());
    c.set("camera.z", s.camera_position.z());
    c.set("scene.placement_x", s.placement_center.x());
    c.set("scene.placement_y", s.placement_center.y());
    c.set("scene.placement_radius", s.placement_radius);
    c.set("scene.table_height", s.table_height);
    c.set("scene.object_radius", s.object_radius);
    c.set("scene.object_height", s.object_height);
    c.set("scene.object_count", s.object_count);
    c.set("scene.diameter_spread", s.diameter_spread);
    c.set("scene.object_keypoint_density", s.object_keypoint_density);
    c.set("scene.table_keypoint_density", s.table_keypoint_density);
    c.set("scene.descriptor_length", s.descriptor_length);
    c.set("scene.descriptor_noise", s.descriptor_noise);
    c.set("scene.depth_noise_mm", s.depth_noise_mm);
    c.set("scene.max_range_m", s.max_range_m);
    c.set("scene.texture_seed", std::to_string(s.texture_seed));
}

std::vector<float> hashed_descriptor(std::uint64_t seed, std::int64_t u, std::int64_t v, int length) {
    std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(u)) ^
                               (splitmix(static_cast<std::uint64_t>(v)) << 1));
    std::vector<float> out(static_cast<std::size_t>(length));
    for (auto& x : out) {
        h = splitmix(h);
        x = static_cast<float>(static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0);
    }
    return out;
}

std::vector<Anchor> object_anchors(const ObjectSpec& obj, const SceneConfig& cfg) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(obj.texture_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Anchor> out;

    const double side_area = kTwoPi * obj.radius * obj.height;
    const auto n_side = static_cast<int>(std::lround(side_area * cfg.object_keypoint_density));
    for (int i = 0; i < n_side; ++i) {
        const double phi = kTwoPi * u01(rng);
        const double z = obj.height * u01(rng);
        Anchor a;
        a.point = {obj.radius * std::cos(phi), obj.radius * std::sin(phi), z};
        a.normal = {std::cos(phi), std::sin(phi), 0.0};
        a.descriptor = hashed_descriptor(obj.texture_seed, quantize(phi * obj.radius), quantize(z),
                                         cfg.descriptor_length);
        out.push_back(std::move(a));
    }

    const double top_area = std::numbers::pi * obj.radius * obj.radius;
    const auto n_top = static_cast<int>(std::lround(top_area * cfg.object_keypoint_density));
    for (int i = 0; i < n_top; ++i) {
        const double rho = obj.radius * std::sqrt(u01(rng)) * 0.95;
        const double phi = kTwoPi * u01(rng);
        Anchor a;
        a.point = {rho * std::cos(phi), rho * std::sin(phi), obj.height};
        a.normal = Vec3::UnitZ();
        a.descriptor = hashed_descriptor(~obj.texture_seed, quantize(a.point.x()), quantize(a.point.y()),
                                         cfg.descriptor_length);
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Anchor> table_anchors(const SceneConfig& cfg) {
    std::mt19937_64 rng(splitmix(cfg.texture_seed));
    const double e = cfg.table_keypoint_half_extent;
    std::uniform_real_distribution<double> u(-e, e);
    const auto n = static_cast<int>(std::lround(4.0 * e * e * cfg.table_keypoint_density));
    std::vector<Anchor> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Anchor a;
        a.point = {cfg.placement_center.x() + u(rng), cfg.placement_center.y() + u(rng), cfg.table_height};
        a.normal = Vec3::UnitZ();
        a.descriptor = hashed_descriptor(cfg.texture_seed, quantize(a.point.x()), quantize(a.point.y()),
                                         cfg.descriptor_length);
        out.push_back(std::move(a));
    }
    return out;
}

World::World(SceneConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    objects_ = cfg_.objects();
    for (const auto& o : objects_) {
        object_anchors_.push_back(object_anchors(o, cfg_));
    }
    table_anchors_ = table_anchors(cfg_);
}

CameraModel World::default_camera() const {
    const CameraModel cam(cfg_.intrinsics, cfg_.camera_mount());
    return cam.aimed_at(cfg_.placement_center + Vec3(0.0, 0.0, 0.1));
}

}  // namespace vsg::sim
