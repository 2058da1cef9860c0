#include "vsg/sim/trial.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vsg::sim {
namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::array<std::string_view, kOutcomeCount> kOutcomeNames{
    "ObjectNotDetected", "GripperLost", "GraspingFailed", "LiftingFailed", "ObjectTouched", "ObjectNotTouched"};

Vec3 uniform_in_ball(double radius, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const Vec3 v(u(rng), u(rng), u(rng));
        if (v.squaredNorm() <= 1.0) {
            return radius * v;
        }
    }
}

Vec3 unit_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const Vec3 v(n(rng), n(rng), n(rng));
        if (v.norm() > 1e-9) {
            return v.normalized();
        }
    }
}

Vec3 gaussian3(double sigma, std::mt19937_64& rng) {
    if (!(sigma > 0.0)) {
        return Vec3::Zero();
    }
    std::normal_distribution<double> n(0.0, sigma);
    return {n(rng), n(rng), n(rng)};
}

Vec3 clamp_norm(const Vec3& v, double max_norm) {
    const double n = v.norm();
    return n > max_norm ? Vec3(v * (max_norm / n)) : v;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::VGG ? "VGG" : "NVGG"; }

std::string_view to_string(TrialOutcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }

Mode parse_mode(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "vgg") {
        return Mode::VGG;
    }
    if (lower == "nvgg") {
        return Mode::NVGG;
    }
    throw std::invalid_argument("unknown mode: " + std::string(s));
}

TrialOutcome parse_outcome(std::string_view s) {
    for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
        if (kOutcomeNames[i] == s) {
            return static_cast<TrialOutcome>(i);
        }
    }
    throw std::invalid_argument("unknown outcome: " + std::string(s));
}

void TrialParams::validate() const {
    seg.validate();
    db.validate();
    filter.validate();
    tracker.validate();
    grasp.validate();
    if (!(frame_dt > 0.0) || !(timeout_s > 0.0) || !(convergence_delay > 0.0) ||
        convergence_delay >= frame_dt) {
        throw std::invalid_argument("TrialParams: need 0 < convergence_delay < frame_dt and positive timeouts");
    }
    if (!(arm_offset_max >= 0.0) || !(arm_jitter >= 0.0) || !(max_step > 0.0) ||
        !(reach_tolerance > 0.0) || !(init_position_sigma > 0.0) || !(init_velocity_sigma > 0.0)) {
        throw std::invalid_argument("TrialParams: bad arm or servo settings");
    }
}

void apply(const Config& c, TrialParams& p) {
    apply(c, p.seg);
    apply(c, p.match);
    apply(c, p.db);
    apply(c, p.filter);
    apply(c, p.tracker);
    apply(c, p.grasp.geometry);
    int target = static_cast<int>(p.target_object);
    c.read("trial.target_object", target);
    if (target < 0) {
        throw std::invalid_argument("config: trial.target_object must be >= 0");
    }
    p.target_object = static_cast<std::size_t>(target);
    c.read("trial.frame_dt", p.frame_dt);
    c.read("trial.timeout_s", p.timeout_s);
    c.read("trial.convergence_delay", p.convergence_delay);
    c.read("trial.arm_offset_max", p.arm_offset_max);
    c.read("trial.arm_jitter", p.arm_jitter);
    c.read("trial.max_step", p.max_step);
    c.read("trial.pregrasp_distance", p.pregrasp_distance);
    c.read("trial.palm_clearance", p.palm_clearance);
    c.read("trial.reach_tolerance", p.reach_tolerance);
    c.read("trial.approach_timeout_s", p.approach_timeout_s);
    c.read("trial.init_position_sigma", p.init_position_sigma);
    c.read("trial.init_velocity_sigma", p.init_velocity_sigma);
    c.read("trial.arm_base_x", p.arm_base.x());
    c.read("trial.arm_base_y", p.arm_base.y());
    c.read("trial.arm_base_z", p.arm_base.z());
    c.read("trial.home_x", p.home.x());
    c.read("trial.home_y", p.home.y());
    c.read("trial.home_z", p.home.z());
    c.read("grasp.palm_depth", p.grasp.palm_depth);
    c.read("grasp.step", p.grasp.step);
    c.read("grasp.max_push", p.grasp.max_push);
    c.read("grasp.friction_margin", p.grasp.friction_margin);
    c.read("grasp.lift_height", p.grasp.lift_height);
    p.validate();
}

void store(Config& c, const TrialParams& p) {
    store(c, p.seg);
    store(c, p.match);
    store(c, p.db);
    store(c, p.filter);
    store(c, p.tracker);
    store(c, p.grasp.geometry);
    c.set("trial.target_object", static_cast<int>(p.target_object));
    c.set("trial.frame_dt", p.frame_dt);
    c.set("trial.timeout_s", p.timeout_s);
    c.set("trial.convergence_delay", p.convergence_delay);
    c.set("trial.arm_offset_max", p.arm_offset_max);
    c.set("trial.arm_jitter", p.arm_jitter);
    c.set("trial.max_step", p.max_step);
    c.set("trial.pregrasp_distance", p.pregrasp_distance);
    c.set("trial.palm_clearance", p.palm_clearance);
    c.set("trial.reach_tolerance", p.reach_tolerance);
    c.set("trial.approach_timeout_s", p.approach_timeout_s);
    c.set("trial.init_position_sigma", p.init_position_sigma);
    c.set("trial.init_velocity_sigma", p.init_velocity_sigma);
    c.set("trial.arm_base_x", p.arm_base.x());
    c.set("trial.arm_base_y", p.arm_base.y());
    c.set("trial.arm_base_z", p.arm_base.z());
    c.set("trial.home_x", p.home.x());
    c.set("trial.home_y", p.home.y());
    c.set("trial.home_z", p.home.z());
    c.set("grasp.palm_depth", p.grasp.palm_depth);
    c.set("grasp.step", p.grasp.step);
    c.set("grasp.max_push", p.grasp.max_push);
    c.set("grasp.friction_margin", p.grasp.friction_margin);
    c.set("grasp.lift_height", p.grasp.lift_height);
}

Placement random_placement(const SceneConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rho = cfg.placement_radius * std::sqrt(u(rng));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    const double yaw = 2.0 * std::numbers::pi * u(rng);
    return {cfg.placement_center.x() + rho * std::cos(phi), cfg.placement_center.y() + rho * std::sin(phi), yaw};
}

ReferenceDatabase build_reference_db(const World& world, const TrialParams& params, int views,
                                     std::uint64_t seed, int* skipped) {
    if (views < 1) {
        throw std::invalid_argument("build_reference_db: views must be >= 1");
    }
    ReferenceDatabase db(params.db);
    const CameraModel cam = world.default_camera();
    int missed = 0;
    for (std::size_t obj = 0; obj < world.objects().size(); ++obj) {
        std::mt19937_64 rng(mix(seed ^ mix(obj + 1)));
        for (int v = 0; v < views; ++v) {
            SceneState st;
            st.object = obj;
            st.placement = random_placement(world.config(), rng);
            const Frame f = render(world, st, cam, rng);
            const auto rois = extract_rois(f.depth, cam, params.seg);
            if (rois.empty()) {
                ++missed;
                continue;
            }
            const auto largest = std::max_element(rois.begin(), rois.end(), [](const auto& a, const auto& b) {
                return a.pixels.size() < b.pixels.size();
            });
            db.insert(world.objects()[obj].id, keypoints_in(*largest, f.keypoints));
        }
    }
    if (skipped) {
        *skipped = missed;
    }
    db.reset_uniform();
    return db;
}

TrialRecord run_trial(const World& world, const ReferenceDatabase& db_in, const TrialParams& params,
                      Mode mode, double model_error_mm, std::uint64_t seed, const TrialOverrides& ov) {
    params.validate();
    if (params.target_object >= world.objects().size()) {
        throw std::invalid_argument("run_trial: target object out of range");
    }
    const SceneConfig& cfg = world.config();
    const ObjectSpec& target = world.objects()[params.target_object];
    const GripperGeometry& geom = params.grasp.geometry;

    // Scene draws depend on the seed only, so both modes face the same trial.
    std::mt19937_64 scene_rng(mix(seed));
    std::mt19937_64 noise_rng(mix(seed ^ 0x5157ULL) + static_cast<std::uint64_t>(mode));
    std::mt19937_64 algo_rng(mix(seed ^ 0xa160ULL) + static_cast<std::uint64_t>(mode));
    std::mt19937_64 arm_rng(mix(seed ^ 0xa93ULL) + static_cast<std::uint64_t>(mode));

    TrialRecord rec;
    rec.seed = seed;
    rec.mode = mode;
    rec.model_error_mm = model_error_mm;

    const Placement placement = ov.placement ? *ov.placement : random_placement(cfg, scene_rng);
    const Vec3 offset = ov.arm_offset ? *ov.arm_offset : uniform_in_ball(params.arm_offset_max, scene_rng);
    const Vec3 model_error = ov.model_error ? *ov.model_error : Vec3(model_error_mm / 1000.0 * unit_vector(scene_rng));
    rec.placement = {placement.x, placement.y, cfg.table_height};
    rec.arm_offset = offset;
    rec.model_error = model_error;

    // The pipeline believes the camera sits where the true one is plus the model error.
    const CameraModel true_base(cfg.intrinsics, cfg.camera_mount());
    const CameraModel pipe_base =
        true_base.with_mount(RigidTransform::translation_only(model_error) * cfg.camera_mount());
    const auto aim = [&](const Vec3& target_pt) {
        const CameraModel pipe = pipe_base.aimed_at(target_pt);
        return std::pair{true_base.with_pan_tilt(pipe.pan(), pipe.tilt()), pipe};
    };

    SceneState scene;
    scene.object = params.target_object;
    scene.placement = placement;

    // Detection searches and learns only the requested object's references.
    ReferenceDatabase db = db_in.subset_for(target.id);
    PositionFilter filter(params.filter);
    const auto [true_cam, pipe_cam] = aim(cfg.placement_center + Vec3(0.0, 0.0, 0.1));
    const int max_frames = static_cast<int>(std::floor(params.timeout_s / params.frame_dt + 1e-9));
    std::optional<double> converged_at;
    const auto subset = static_cast<std::size_t>(params.db.subset_size);
    for (int k = 1; k <= max_frames && !converged_at; ++k) {
        const double t = k * params.frame_dt;
        const Frame frame = render(world, scene, true_cam, noise_rng);
        const auto rois = extract_rois(frame.depth, pipe_cam, params.seg);
        const FrameKeypoints source(frame.keypoints);
        ++rec.detection_frames;
        for (const auto& roi : rois) {
            const std::vector<Keypoint> kps = source.extract(roi);
            const auto picked = db.sample_subset(subset, algo_rng);
            std::vector<std::size_t> matched;
            std::vector<std::size_t> unmatched;
            int best_q = 0;
            for (std::size_t idx : picked) {
                MatchParams mp = params.match;
                mp.seed = algo_rng();
                const MatchResult m = match_reference_to_roi(db.at(idx), roi, kps, mp);
                ++rec.matcher_invocations;
                if (m.success) {
                    matched.push_back(idx);
                    best_q = std::max(best_q, m.inlier_count);
                } else {
                    unmatched.push_back(idx);
                }
            }
            db.update(matched, unmatched);
            if (matched.empty()) {
                continue;
            }
            // The visible surface is on average pi/4 radii in front of the axis.
            Vec3 view = roi.centroid_3d - pipe_cam.pose().translation();
            view.z() = 0.0;
            const Vec3 h = roi.centroid_3d + std::numbers::pi / 4.0 * target.radius * view.normalized();
            filter.push({h, static_cast<double>(best_q), t, roi.principal_axis});
        }
        if (filter.converged(t + params.convergence_delay)) {
            converged_at = t;
        }
    }
    if (!converged_at) {
        rec.outcome = TrialOutcome::ObjectNotDetected;
        rec.detail = "position filter did not converge";
        return rec;
    }
    rec.convergence_time_s = *converged_at;
    const PositionEstimate est = *filter.estimate(*converged_at + params.convergence_delay);

    // Grasp planning in the pipeline's frame.
    Vec3 axis = est.axis.z() < 0.0 ? Vec3(-est.axis) : est.axis;
    Vec3 approach = est.position - params.arm_base;
    approach.z() = 0.0;
    approach -= approach.dot(axis) * axis;
    if (approach.norm() < 1e-6) {
        rec.outcome = TrialOutcome::GraspingFailed;
        rec.detail = "degenerate approach direction";
        return rec;
    }
    approach.normalize();
    Mat3 rot;
    rot.col(1) = axis;
    rot.col(2) = -approach;
    rot.col(0) = axis.cross(-approach);
    const Vec3 grasp_origin = est.position - (target.radius + params.palm_clearance) * approach;
    const Vec3 pre_origin = grasp_origin - params.pregrasp_distance * approach;
    const RigidTransform orient = RigidTransform(rot, Vec3::Zero()).orthonormalized();
    const Mat3& r = orient.rotation();
    const auto pose_at = [&](const Vec3& origin) { return RigidTransform(r, origin); };
    const Vec3 to_tracked = r * Vec3(0.0, 0.0, -geom.f_l / 2.0);

    const auto actual_origin = [&](const Vec3& command) {
        return Vec3(command + offset + gaussian3(params.arm_jitter, arm_rng));
    };

    RigidTransform start_actual;
    RigidTransform end_actual;
    if (mode == Mode::NVGG) {
        start_actual = pose_at(actual_origin(pre_origin));
        end_actual = pose_at(actual_origin(grasp_origin));
    } else {
        TrackerState state = make_tracker(params.home + to_tracked, params.init_position_sigma,
                                          params.init_velocity_sigma, params.tracker);
        Vec3 cmd = params.home;
        Vec3 actual = actual_origin(cmd);
        const FingerSpace left = finger_space(geom, -1);
        const FingerSpace right = finger_space(geom, 1);
        const FingerParams fp = params.tracker.finger_params();
        bool at_pre = false;
        bool done = false;
        double t = 0.0;
        double phase_start = 0.0;
        Vec3 goal = pre_origin + to_tracked;
        while (!done) {
            t += params.frame_dt;
            if (!at_pre && t > params.timeout_s + 1e-9) {
                rec.outcome = TrialOutcome::GripperLost;
                rec.detail = "pre-grasp pose not reached";
                return rec;
            }
            if (at_pre && t - phase_start > params.approach_timeout_s + 1e-9) {
                break;
            }
            ++rec.servo_frames;
            const auto [cam_true, cam_pipe] = aim(state.position());
            scene.gripper = GripperPlacement{pose_at(actual), geom};
            const Frame frame = render(world, scene, cam_true, noise_rng);
            const RigidTransform model = pose_at(cmd);
            const FingerDetection d1 = detect_finger(frame.color, frame.depth, left, model, cam_pipe, fp);
            const FingerDetection d2 = detect_finger(frame.color, frame.depth, right, model, cam_pipe, fp);
            const auto f1 = d1.detected() ? std::optional<Vec3>(d1.position) : std::nullopt;
            const auto f2 = d2.detected() ? std::optional<Vec3>(d2.position) : std::nullopt;
            const auto meas = combine_fingers(f1, f2, geom, r, params.tracker.finger_tolerance);
            state = kalman_step(state, params.frame_dt, meas);
            rec.tracker_invocations += 3;

            const ServoCommand sc = servo_correction(state, goal, cmd + to_tracked, params.tracker.gain);
            if (std::holds_alternative<Hold>(sc)) {
                continue;
            }
            const Vec3 delta = clamp_norm(std::get<Vec3>(sc) - (cmd + to_tracked), params.max_step);
            if (delta.norm() > 1e-4) {
                cmd += delta;
                actual = actual_origin(cmd);
            }
            const bool reached = (state.position() - goal).norm() < params.reach_tolerance &&
                                 delta.norm() < params.reach_tolerance;
            if (reached && !at_pre) {
                at_pre = true;
                phase_start = t;
                start_actual = pose_at(actual);
                goal = grasp_origin + to_tracked;
            } else if (reached) {
                done = true;
            }
        }
        end_actual = pose_at(actual);
    }

    GraspObject obj;
    obj.base = rec.placement;
    obj.radius = target.radius;
    obj.height = target.height;
    const GraspResult g = simulate_grasp(start_actual, end_actual, obj, cfg.table_height, params.grasp);

    const Vec3 true_center(placement.x, placement.y, est.position.z() - model_error.z());
    rec.grasp_error = end_actual.translation() - (true_center - (target.radius + params.palm_clearance) * approach);
    rec.touched = g.touched;
    rec.detail = g.reason;
    switch (g.kind) {
        case GraspResultKind::Failed:
            rec.outcome = TrialOutcome::GraspingFailed;
            break;
        case GraspResultKind::Slipped:
            rec.outcome = TrialOutcome::LiftingFailed;
            break;
        case GraspResultKind::Held:
            rec.outcome = g.touched ? TrialOutcome::ObjectTouched : TrialOutcome::ObjectNotTouched;
            break;
    }
    return rec;
}

}  // namespace vsg::sim
