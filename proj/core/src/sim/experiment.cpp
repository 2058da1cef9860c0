#include "vsg/sim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vsg::sim {

double ExperimentStats::frequency(TrialOutcome o) const {
    return trials > 0 ? static_cast<double>(count(o)) / trials : 0.0;
}

double ExperimentStats::success_rate() const {
    return frequency(TrialOutcome::ObjectTouched) + frequency(TrialOutcome::ObjectNotTouched);
}

ExperimentStats summarize(const std::vector<TrialRecord>& records) {
    ExperimentStats s;
    if (!records.empty()) {
        s.mode = records.front().mode;
        s.model_error_mm = records.front().model_error_mm;
    }
    s.trials = static_cast<int>(records.size());
    for (const auto& r : records) {
        ++s.counts[static_cast<std::size_t>(r.outcome)];
    }
    return s;
}

std::vector<TrialRecord> run_trials(const World& world, const ReferenceDatabase& db,
                                    const TrialParams& params, Mode mode, double model_error_mm,
                                    int trials, std::uint64_t seed) {
    std::vector<TrialRecord> out;
    out.reserve(static_cast<std::size_t>(std::max(trials, 0)));
    for (int i = 0; i < trials; ++i) {
        out.push_back(run_trial(world, db, params, mode, model_error_mm, seed + static_cast<std::uint64_t>(i)));
    }
    return out;
}

ExperimentResult run_experiment(const World& world, const ReferenceDatabase& db,
                                const TrialParams& params, Mode mode, double model_error_mm,
                                int trials, std::uint64_t seed) {
    if (trials < 1) {
        throw std::invalid_argument("run_experiment: trials must be >= 1");
    }
    ExperimentResult res;
    res.records = run_trials(world, db, params, mode, model_error_mm, trials, seed);
    res.stats = summarize(res.records);
    res.stats.mode = mode;
    res.stats.model_error_mm = model_error_mm;
    return res;
}

void write_results_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << "seed,mode,model_error_mm,outcome,convergence_time_s,matcher_invocations\n";
    for (const auto& r : records) {
        out << r.seed << ',' << to_string(r.mode) << ',' << r.model_error_mm << ',' << to_string(r.outcome) << ',';
        if (r.convergence_time_s) {
            out << std::fixed << std::setprecision(2) << *r.convergence_time_s << std::defaultfloat;
        }
        out << ',' << r.matcher_invocations << '\n';
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

}  // namespace

std::vector<TrialRecord> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("results csv: missing header");
    }
    const auto header = split_csv(line);
    const auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw std::runtime_error("results csv: missing column " + name);
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_seed = col("seed");
    const std::size_t c_mode = col("mode");
    const std::size_t c_err = col("model_error_mm");
    const std::size_t c_out = col("outcome");
    const std::size_t c_time = col("convergence_time_s");
    const std::size_t c_inv = col("matcher_invocations");

    std::vector<TrialRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() < header.size()) {
            throw std::runtime_error("results csv: short row at line " + std::to_string(lineno));
        }
        TrialRecord r;
        r.seed = std::stoull(cells[c_seed]);
        r.mode = parse_mode(cells[c_mode]);
        r.model_error_mm = std::stod(cells[c_err]);
        r.outcome = parse_outcome(cells[c_out]);
        if (!cells[c_time].empty()) {
            r.convergence_time_s = std::stod(cells[c_time]);
        }
        r.matcher_invocations = std::stol(cells[c_inv]);
        out.push_back(r);
    }
    return out;
}

std::vector<HistogramBin> convergence_histogram(const std::vector<TrialRecord>& records, double width,
                                                double limit) {
    if (!(width > 0.0) || !(limit > 0.0)) {
        throw std::invalid_argument("convergence_histogram: width and limit must be positive");
    }
    const auto n = static_cast<std::size_t>(std::ceil(limit / width - 1e-9));
    std::vector<HistogramBin> bins(n);
    for (std::size_t i = 0; i < n; ++i) {
        bins[i].lo = static_cast<double>(i) * width;
        bins[i].hi = static_cast<double>(i + 1) * width;
    }
    for (const auto& r : records) {
        if (!r.convergence_time_s) {
            continue;
        }
        auto i = static_cast<std::size_t>(std::max(0.0, std::floor(*r.convergence_time_s / width + 1e-9)));
        ++bins[std::min(i, n - 1)].count;
    }
    return bins;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
    int total = 0;
    for (const auto& b : bins) {
        total += b.count;
    }
    out << "bin_start_s,bin_end_s,count,fraction\n";
    for (const auto& b : bins) {
        out << b.lo << ',' << b.hi << ',' << b.count << ','
            << (total > 0 ? static_cast<double>(b.count) / total : 0.0) << '\n';
    }
}

double fraction_converged_within(const std::vector<TrialRecord>& records, double seconds) {
    int detected = 0;
    int fast = 0;
    for (const auto& r : records) {
        if (r.convergence_time_s) {
            ++detected;
            fast += *r.convergence_time_s <= seconds + 1e-9 ? 1 : 0;
        }
    }
    return detected > 0 ? static_cast<double>(fast) / detected : 0.0;
}

void write_stats_table(std::ostream& out, const std::vector<ExperimentStats>& rows) {
    out << std::left << std::setw(20) << "outcome";
    for (const auto& r : rows) {
        std::ostringstream h;
        h << to_string(r.mode) << " " << r.model_error_mm << "mm";
        out << std::setw(16) << h.str();
    }
    out << '\n';
    for (int o = 0; o < kOutcomeCount; ++o) {
        const auto oc = static_cast<TrialOutcome>(o);
        out << std::setw(20) << to_string(oc);
        for (const auto& r : rows) {
            std::ostringstream cell;
            cell << r.count(oc) << " (" << std::fixed << std::setprecision(0) << 100.0 * r.frequency(oc) << "%)";
            out << std::setw(16) << cell.str();
        }
        out << '\n';
    }
    out << std::setw(20) << "success";
    for (const auto& r : rows) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(0) << 100.0 * r.success_rate() << "%";
        out << std::setw(16) << cell.str();
    }
    out << '\n' << std::right;
}

MatchStrategy parse_strategy(std::string_view s) {
    if (s == "prob") {
        return MatchStrategy::Probabilistic;
    }
    if (s == "all") {
        return MatchStrategy::AllReferences;
    }
    throw std::invalid_argument("unknown strategy: " + std::string(s));
}

std::string_view to_string(MatchStrategy s) { return s == MatchStrategy::Probabilistic ? "prob" : "all"; }

std::vector<Video> record_videos(const World& world, const TrialParams& params, int videos, int frames,
                                 std::uint64_t seed) {
    std::vector<Video> out;
    const CameraModel cam = world.default_camera();
    for (int v = 0; v < videos; ++v) {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(v) + 1);
        SceneState st;
        st.object = params.target_object;
        st.placement = random_placement(world.config(), rng);
        Video video;
        for (int f = 0; f < frames; ++f) {
            const Frame fr = render(world, st, cam, rng);
            VideoFrame vf;
            vf.rois = extract_rois(fr.depth, cam, params.seg);
            for (const auto& roi : vf.rois) {
                vf.roi_keypoints.push_back(keypoints_in(roi, fr.keypoints));
            }
            video.push_back(std::move(vf));
        }
        out.push_back(std::move(video));
    }
    return out;
}

ReferenceDatabase database_of_size(const ReferenceDatabase& full, std::size_t n,
                                   const std::string& first_object) {
    std::vector<std::string> ids = full.object_ids();
    const auto it = std::find(ids.begin(), ids.end(), first_object);
    if (it != ids.end()) {
        std::rotate(ids.begin(), it, it + 1);
    }
    std::vector<std::vector<const Reference*>> per(ids.size());
    for (const auto& r : full.references()) {
        const auto pos = std::find(ids.begin(), ids.end(), r.object_id) - ids.begin();
        per[static_cast<std::size_t>(pos)].push_back(&r);
    }
    ReferenceDatabase out(full.params());
    std::size_t round = 0;
    while (out.size() < n) {
        bool any = false;
        for (std::size_t o = 0; o < per.size() && out.size() < n; ++o) {
            if (round < per[o].size()) {
                out.insert(per[o][round]->object_id, per[o][round]->keypoints);
                any = true;
            }
        }
        if (!any) {
            throw std::invalid_argument("database_of_size: database holds fewer than n references");
        }
        ++round;
    }
    out.reset_uniform();
    return out;
}

BenchRow bench_matching(const std::vector<Video>& videos, const ReferenceDatabase& db_in,
                        const TrialParams& params, MatchStrategy strategy, std::uint64_t seed) {
    BenchRow row;
    row.strategy = strategy;
    row.db_size = db_in.size();
    std::mt19937_64 rng(seed);
    const auto subset = static_cast<std::size_t>(params.db.subset_size);
    long total_rois = 0;
    long total_inv = 0;
    double total_ms = 0.0;
    std::vector<std::size_t> everything(db_in.size());
    std::iota(everything.begin(), everything.end(), 0);

    for (const auto& video : videos) {
        ReferenceDatabase db = db_in;
        db.reset_uniform();
        for (const auto& frame : video) {
            long inv = 0;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < frame.rois.size(); ++i) {
                const auto picked = strategy == MatchStrategy::Probabilistic ? db.sample_subset(subset, rng)
                                                                             : everything;
                std::vector<std::size_t> matched;
                std::vector<std::size_t> unmatched;
                for (std::size_t idx : picked) {
                    MatchParams mp = params.match;
                    mp.seed = rng();
                    const MatchResult m = match_reference_to_roi(db.at(idx), frame.rois[i], frame.roi_keypoints[i], mp);
                    ++inv;
                    (m.success ? matched : unmatched).push_back(idx);
                }
                db.update(matched, unmatched);
            }
            total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            const long rois = static_cast<long>(frame.rois.size());
            const bool ok = strategy == MatchStrategy::Probabilistic
                                ? inv <= static_cast<long>(subset) * rois
                                : inv == static_cast<long>(db.size()) * rois;
            row.bound_violations += ok ? 0 : 1;
            row.max_invocations = std::max(row.max_invocations, inv);
            total_inv += inv;
            total_rois += rois;
            ++row.frames;
        }
    }
    if (row.frames > 0) {
        row.mean_rois = static_cast<double>(total_rois) / static_cast<double>(row.frames);
        row.mean_invocations = static_cast<double>(total_inv) / static_cast<double>(row.frames);
        row.mean_match_ms = total_ms / static_cast<double>(row.frames);
    }
    return row;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "strategy,db_size,frames,mean_rois,mean_invocations_per_frame,max_invocations_per_frame,"
           "bound_violations,mean_match_ms_per_frame\n";
    for (const auto& r : rows) {
        out << to_string(r.strategy) << ',' << r.db_size << ',' << r.frames << ',' << r.mean_rois << ','
            << r.mean_invocations << ',' << r.max_invocations << ',' << r.bound_violations << ','
            << r.mean_match_ms << '\n';
    }
}

}  // namespace vsg::sim
