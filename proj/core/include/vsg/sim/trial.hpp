#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vsg/config.hpp"
#include "vsg/refdb.hpp"
#include "vsg/sim/physics.hpp"
#include "vsg/sim/render.hpp"
#include "vsg/sim/scene.hpp"

namespace vsg::sim {

enum class Mode { NVGG, VGG };

enum class TrialOutcome {
    ObjectNotDetected,
    GripperLost,
    GraspingFailed,
    LiftingFailed,
    ObjectTouched,
    ObjectNotTouched,
};

inline constexpr int kOutcomeCount = 6;

std::string_view to_string(Mode m);
std::string_view to_string(TrialOutcome o);
/// Throw std::invalid_argument on unknown names. Mode names are case-insensitive.
Mode parse_mode(std::string_view s);
TrialOutcome parse_outcome(std::string_view s);

inline bool is_success(TrialOutcome o) {
    return o == TrialOutcome::ObjectTouched || o == TrialOutcome::ObjectNotTouched;
}

struct TrialParams {
    SegParams seg;
    MatchParams match;
    DbParams db;
    PosFilterParams filter;
    TrackerParams tracker;
    GraspSetup grasp;
    std::size_t target_object = 0;
    double frame_dt = 0.1;            ///< s
    double timeout_s = 30.0;
    double convergence_delay = 0.05;  ///< filter evaluated this long after each frame
    double arm_offset_max = 0.03;     ///< radius of the per-trial systematic offset ball
    double arm_jitter = 0.003;        ///< per-command sigma, per axis
    double max_step = 0.05;           ///< per frame, meters
    double pregrasp_distance = 0.08;
    double palm_clearance = 0.015;    ///< palm stops this far from the object surface
    double reach_tolerance = 0.01;
    double approach_timeout_s = 10.0; ///< pre-grasp to grasp, servo mode only
    double init_position_sigma = 0.05;
    double init_velocity_sigma = 0.02;
    Vec3 arm_base{0.45, -0.45, 0.0};  ///< grasps approach horizontally from here
    Vec3 home{0.30, -0.30, 0.25};     ///< parked gripper position before the approach

    void validate() const;
};

void apply(const Config& c, TrialParams& p);
void store(Config& c, const TrialParams& p);

/// Values normally drawn from the trial seed.
struct TrialOverrides {
    std::optional<Placement> placement;
    std::optional<Vec3> model_error;  ///< meters; replaces the random direction
    std::optional<Vec3> arm_offset;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    Mode mode = Mode::VGG;
    double model_error_mm = 0.0;
    TrialOutcome outcome = TrialOutcome::ObjectNotDetected;
    std::optional<double> convergence_time_s;
    long matcher_invocations = 0;
    int detection_frames = 0;
    int servo_frames = 0;
    long tracker_invocations = 0;  ///< finger detections plus Kalman steps
    bool touched = false;
    Vec3 placement = Vec3::Zero();
    Vec3 arm_offset = Vec3::Zero();
    Vec3 model_error = Vec3::Zero();
    Vec3 grasp_error = Vec3::Zero();  ///< true final gripper origin minus the ideal one
    std::string detail;
};

/// Renders `views` placements of every object, segments them and stores the
/// keypoints of the single matching ROI. Views without exactly one ROI are
/// skipped and counted in `skipped`. Throws std::invalid_argument when views < 1.
ReferenceDatabase build_reference_db(const World& world, const TrialParams& params, int views,
                                     std::uint64_t seed, int* skipped = nullptr);

/// Random placement uniform in the placement disc, random yaw.
Placement random_placement(const SceneConfig& cfg, std::mt19937_64& rng);

/// One detect, approach, grasp and lift attempt. `db` is copied and its
/// weights reset to uniform before the first frame.
TrialRecord run_trial(const World& world, const ReferenceDatabase& db, const TrialParams& params,
                      Mode mode, double model_error_mm, std::uint64_t seed,
                      const TrialOverrides& overrides = {});

}  // namespace vsg::sim
