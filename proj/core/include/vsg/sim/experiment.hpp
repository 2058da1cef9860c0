#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "vsg/sim/trial.hpp"

namespace vsg::sim {

/// Outcome counts in the row layout of the grasping results tables.
struct ExperimentStats {
    Mode mode = Mode::VGG;
    double model_error_mm = 0.0;
    int trials = 0;
    std::array<int, kOutcomeCount> counts{};

    int count(TrialOutcome o) const { return counts[static_cast<std::size_t>(o)]; }
    double frequency(TrialOutcome o) const;
    double success_rate() const;
};

ExperimentStats summarize(const std::vector<TrialRecord>& records);

/// Trials use seeds seed, seed + 1, ..., seed + trials - 1.
std::vector<TrialRecord> run_trials(const World& world, const ReferenceDatabase& db,
                                    const TrialParams& params, Mode mode, double model_error_mm,
                                    int trials, std::uint64_t seed);

struct ExperimentResult {
    ExperimentStats stats;
    std::vector<TrialRecord> records;
};

/// run_trials plus the summary. Throws std::invalid_argument when trials < 1.
ExperimentResult run_experiment(const World& world, const ReferenceDatabase& db,
                                const TrialParams& params, Mode mode, double model_error_mm,
                                int trials, std::uint64_t seed);

// results.csv: seed,mode,model_error_mm,outcome,convergence_time_s,matcher_invocations
void write_results_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_results_csv(std::istream& in);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

/// Convergence times of detected trials in bins of `width` seconds from 0 up to `limit`.
std::vector<HistogramBin> convergence_histogram(const std::vector<TrialRecord>& records, double width,
                                                double limit);
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);

/// Fraction of detected trials converging at or before `seconds`; 0 when none were detected.
double fraction_converged_within(const std::vector<TrialRecord>& records, double seconds);

void write_stats_table(std::ostream& out, const std::vector<ExperimentStats>& rows);

enum class MatchStrategy { Probabilistic, AllReferences };

MatchStrategy parse_strategy(std::string_view s);
std::string_view to_string(MatchStrategy s);

/// ROIs and keypoints of one rendered frame, reused across database sizes.
struct VideoFrame {
    std::vector<Superpixel> rois;
    std::vector<std::vector<Keypoint>> roi_keypoints;
};

using Video = std::vector<VideoFrame>;

/// Static scene with a random placement of the target, `frames` noisy renders each.
std::vector<Video> record_videos(const World& world, const TrialParams& params, int videos, int frames,
                                 std::uint64_t seed);

/// First `n` references, taken round-robin over objects (target first).
ReferenceDatabase database_of_size(const ReferenceDatabase& full, std::size_t n,
                                   const std::string& first_object);

struct BenchRow {
    MatchStrategy strategy = MatchStrategy::Probabilistic;
    std::size_t db_size = 0;
    long frames = 0;
    double mean_rois = 0.0;
    double mean_invocations = 0.0;  ///< per frame
    long max_invocations = 0;       ///< per frame
    long bound_violations = 0;      ///< frames above subset_size·|ROIs| (prob) or != n·|ROIs| (all)
    double mean_match_ms = 0.0;     ///< matching wall time per frame
};

/// Runs the detection loop (sample, match, update) over every video with
/// weights reset per video, counting matcher invocations per frame.
BenchRow bench_matching(const std::vector<Video>& videos, const ReferenceDatabase& db,
                        const TrialParams& params, MatchStrategy strategy, std::uint64_t seed);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace vsg::sim
