// Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion; exit status
// is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vsg/refdb.hpp"
#include "vsg/posfilter.hpp"
#include "vsg/gripper_track.hpp"
#include "vsg/sim/experiment.hpp"

namespace fs = std::filesystem;
using namespace vsg;
using namespace vsg::sim;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

fs::path g_out = "acceptance_out";

// ---- 1: weighted sampling example ------------------------------------------

Verdict criterion_1() {
    ReferenceDatabase db;
    for (int i = 0; i < 8; ++i) {
        db.insert("o", {});
    }
    const std::vector<double> bounds{0, .08, .21, .43, .51, .59, .77, .89, 1.0};
    std::vector<double> w;
    for (std::size_t i = 1; i < bounds.size(); ++i) {
        w.push_back(bounds[i] - bounds[i - 1]);
    }
    db.set_weights(w);
    const auto picked = db.sample_subset(std::vector<double>{.12, .25, .37, .56, .92});
    std::vector<std::size_t> one_based;
    for (auto i : picked) {
        one_based.push_back(i + 1);
    }
    std::ostringstream d;
    d << "subset {";
    for (std::size_t i = 0; i < one_based.size(); ++i) {
        d << (i ? "," : "") << one_based[i];
    }
    d << "}";
    return {one_based == std::vector<std::size_t>{2, 3, 5, 8}, d.str()};
}

// ---- 2: database invariants and update oracle --------------------------------

Verdict criterion_2() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> op(0, 9);
    ReferenceDatabase db;
    db.insert("o", {});
    double worst_sum = 0.0;
    bool bounds_ok = true;
    for (int step = 0; step < 10000; ++step) {
        const int o = op(rng);
        if (o == 0 && db.size() < 80) {
            db.insert("o", {});
        } else if (o == 1) {
            db.reset_uniform();
        } else {
            const auto picked = db.sample_subset(5, rng);
            std::vector<std::size_t> hit;
            std::vector<std::size_t> miss;
            for (auto i : picked) {
                (std::bernoulli_distribution(0.4)(rng) ? hit : miss).push_back(i);
            }
            db.update(hit, miss);
        }
        const auto w = db.weights();
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
        for (double x : w) {
            bounds_ok = bounds_ok && x >= db.min_weight() - 1e-12 && x <= db.max_weight() + 1e-12;
        }
    }

    // n = 2, m = 0.1, M = 0.9, gains 0.3 / 0.04.
    DbParams p;
    p.min_weight = 0.1;
    p.max_weight = 0.9;
    p.gain_success = 0.3;
    p.gain_failure = 0.04;
    const auto fresh = [&] {
        ReferenceDatabase d(p);
        d.insert("a", {});
        d.insert("b", {});
        return d;
    };
    ReferenceDatabase s = fresh();
    s.update(std::vector<std::size_t>{0}, {});
    // z = (0.5 + 0.3 * 0.4, 0.5), delta = -0.12, shares by z - m.
    const double s0 = 0.62 - 0.12 * 0.52 / 0.92;
    const double s1 = 0.5 - 0.12 * 0.40 / 0.92;
    ReferenceDatabase f = fresh();
    f.update({}, std::vector<std::size_t>{1});
    // z = (0.5, 0.5 - 0.04 * 0.4), delta = +0.016, shares by M - z.
    const double z1 = 0.5 - 0.04 * 0.4;
    const double f0 = 0.5 + 0.016 * 0.4 / (0.4 + (0.9 - z1));
    const double f1 = z1 + 0.016 * (0.9 - z1) / (0.4 + (0.9 - z1));
    const double err = std::max({std::abs(s.at(0).weight - s0), std::abs(s.at(1).weight - s1),
                                 std::abs(f.at(0).weight - f0), std::abs(f.at(1).weight - f1)});

    std::ostringstream d;
    d << "max |sum-1| " << worst_sum << ", bounds " << (bounds_ok ? "held" : "violated")
      << ", worked example error " << err;
    return {worst_sum <= 1e-9 && bounds_ok && err <= 1e-12, d.str()};
}

// ---- 3: matching cost against database size -----------------------------------

struct Shared {
    World world;
    TrialParams params;
    ReferenceDatabase full;
};

Shared& shared() {
    static Shared s{World{}, TrialParams{}, ReferenceDatabase{}};
    static bool built = false;
    if (!built) {
        s.full = build_reference_db(s.world, s.params, 50, 42);
        built = true;
    }
    return s;
}

Verdict criterion_3() {
    Shared& s = shared();
    const auto videos = record_videos(s.world, s.params, 20, 200, 3);
    std::vector<BenchRow> rows;
    const std::string target = s.world.objects().at(s.params.target_object).id;
    bool ok = true;
    double prob_lo = 1e9;
    double prob_hi = 0.0;
    for (std::size_t n = 10; n <= 100; n += 10) {
        const ReferenceDatabase db = database_of_size(s.full, n, target);
        const BenchRow prob = bench_matching(videos, db, s.params, MatchStrategy::Probabilistic, 100 + n);
        const BenchRow all = bench_matching(videos, db, s.params, MatchStrategy::AllReferences, 100 + n);
        ok = ok && prob.bound_violations == 0 && all.bound_violations == 0 && all.frames == 4000;
        ok = ok && std::abs(all.mean_invocations - static_cast<double>(n) * all.mean_rois) < 1e-9;
        prob_lo = std::min(prob_lo, prob.mean_invocations);
        prob_hi = std::max(prob_hi, prob.mean_invocations);
        rows.push_back(prob);
        rows.push_back(all);
    }
    std::ofstream f(g_out / "bench.csv");
    write_bench_csv(f, rows);
    std::ostringstream d;
    d << "prob mean invocations/frame in [" << prob_lo << ", " << prob_hi << "] for n=10..100, all-references "
      << rows[1].mean_invocations << " at n=10 and " << rows.back().mean_invocations << " at n=100";
    const double cap = s.params.db.subset_size * rows.front().mean_rois;
    return {ok && prob_hi <= cap + 1e-9, d.str()};
}

// ---- 4: position filter -----------------------------------------------------

FilterEntry random_entry(std::mt19937_64& rng, double t, double sigma = 0.02) {
    std::normal_distribution<double> g(0.0, sigma);
    std::uniform_real_distribution<double> q(1.0, 50.0);
    return {Vec3(0.45 + g(rng), g(rng), 0.1 + g(rng)), q(rng), t, Vec3::UnitZ()};
}

// Weighted mean and quality evaluated directly from the entries.
std::pair<Vec3, double> direct_eval(const std::vector<FilterEntry>& f, double now, double alpha) {
    double bsum = 0.0;
    double rec = 0.0;
    Vec3 num = Vec3::Zero();
    for (const auto& e : f) {
        bsum += e.q / (now - e.t);
        num += e.q / (now - e.t) * e.h;
        rec += 1.0 / (now - e.t);
    }
    const Vec3 mean = num / bsum;
    double disp = 0.0;
    for (const auto& e : f) {
        disp += e.q / (now - e.t) * (e.h - mean).norm();
    }
    return {mean, disp / bsum * rec / alpha};
}

Verdict criterion_4() {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> dt(0.05, 0.3);
    double err_e = 0.0;
    for (int i = 0; i < 1000; ++i) {
        PosFilterParams p;
        p.remove = 0;
        PositionFilter f(p);
        double t = 0.0;
        const int n = 1 + static_cast<int>(rng() % 10);
        std::vector<FilterEntry> es;
        for (int k = 0; k < n; ++k) {
            t += dt(rng);
            es.push_back(random_entry(rng, t));
            f.push(es.back());
        }
        const auto [e, q] = direct_eval(es, t + 0.1, p.alpha);
        const auto est = f.estimate(t + 0.1);
        err_e = std::max({err_e, (est->position - e).norm(), std::abs(est->quality - q)});
    }

    // Leave-one-out removal against enumeration of every removal set of size j.
    int loo_mismatch = 0;
    for (int i = 0; i < 300; ++i) {
        const int n = 2 + static_cast<int>(rng() % 9);
        PosFilterParams p;
        p.capacity = n;
        p.remove = static_cast<int>(rng() % static_cast<unsigned>(n));
        PositionFilter f(p);
        std::vector<FilterEntry> es;
        double t = 0.0;
        for (int k = 0; k < n; ++k) {
            t += dt(rng);
            es.push_back(random_entry(rng, t));
            f.push(es.back());
        }
        const double now = t + 0.1;
        std::vector<std::pair<double, std::size_t>> loo;
        for (std::size_t k = 0; k < es.size(); ++k) {
            std::vector<FilterEntry> rest = es;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
            loo.emplace_back(direct_eval(rest, now, p.alpha).second, k);
        }
        std::sort(loo.begin(), loo.end());
        std::set<std::size_t> dropped;
        for (int r = 0; r < p.remove; ++r) {
            dropped.insert(loo[static_cast<std::size_t>(r)].second);
        }
        std::vector<std::size_t> expect;
        for (std::size_t k = 0; k < es.size(); ++k) {
            if (!dropped.count(k)) {
                expect.push_back(k);
            }
        }
        loo_mismatch += f.estimate(now)->kept == expect ? 0 : 1;
    }

    // Two gross outliers among ten entries; consistent entries scatter with the depth noise.
    constexpr double consistent_sigma = 0.005;
    int better = 0;
    std::uniform_real_distribution<double> far(0.5, 1.0);
    for (int i = 0; i < 1000; ++i) {
        PositionFilter f;
        std::vector<FilterEntry> es;
        std::set<int> bad{static_cast<int>(rng() % 10)};
        while (bad.size() < 2) {
            bad.insert(static_cast<int>(rng() % 10));
        }
        double t = 0.0;
        for (int k = 0; k < 10; ++k) {
            t += dt(rng);
            FilterEntry e = random_entry(rng, t, consistent_sigma);
            if (bad.count(k)) {
                Vec3 dir(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                         std::normal_distribution<double>()(rng));
                e.h += far(rng) * dir.normalized();
            }
            es.push_back(e);
            f.push(e);
        }
        const Vec3 truth(0.45, 0.0, 0.1);
        const double now = t + 0.1;
        const Vec3 whole = weighted_position(es, now);
        better += (f.estimate(now)->position - truth).norm() < (whole - truth).norm() ? 1 : 0;
    }
    std::ostringstream d;
    d << "estimate error " << err_e << ", leave-one-out mismatches " << loo_mismatch << "/300, outlier removal better in "
      << better << "/1000";
    return {err_e <= 1e-12 && loo_mismatch == 0 && better >= 950, d.str()};
}

// ---- 5: segmentation ----------------------------------------------------------

Verdict criterion_5() {
    const World world;
    const CameraModel cam = world.default_camera();
    const SegParams p;
    int single = 0;
    int good = 0;
    double worst = 1.0;
    for (int s = 0; s < 20; ++s) {
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(s));
        SceneState st;
        st.object = 0;
        st.placement = random_placement(world.config(), rng);
        const Frame f = render(world, st, cam, rng);
        const auto rois = extract_rois(f.depth, cam, p);
        if (rois.size() != 1) {
            worst = 0.0;
            continue;
        }
        ++single;
        const Mask m = superpixel_mask(rois[0], cam.width(), cam.height());
        long inter = 0;
        long uni = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            inter += (m.data()[i] && f.object_mask.data()[i]) ? 1 : 0;
            uni += (m.data()[i] || f.object_mask.data()[i]) ? 1 : 0;
        }
        const double iou = static_cast<double>(inter) / static_cast<double>(uni);
        worst = std::min(worst, iou);
        good += iou >= 0.6 ? 1 : 0;
    }
    std::ostringstream d;
    d << single << "/20 placements with exactly one ROI, min IoU " << worst;
    return {single == 20 && good == 20, d.str()};
}

// ---- 6: finger spaces ---------------------------------------------------------

Verdict criterion_6() {
    GripperGeometry g;
    g.g_w = 0.10;
    g.f_w = 0.02;
    g.f_t = 0.01;
    g.f_l = 0.05;
    g.eps = 0.03;
    const FingerSpace l = finger_space(g, -1);
    const FingerSpace r = finger_space(g, 1);
    const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-15; };
    bool hand = near(l.x.lo, -0.09) && near(l.x.hi, -0.01) && near(l.y.lo, -0.035) && near(l.y.hi, 0.035) &&
                near(l.z.lo, -0.08) && near(l.z.hi, 0.03);
    hand = hand && near(r.x.lo, 0.01) && near(r.x.hi, 0.09);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.001, 0.2);
    int mirrored = 0;
    for (int i = 0; i < 1000; ++i) {
        GripperGeometry q;
        q.f_w = u(rng);
        q.g_w = q.f_w + u(rng);
        q.f_t = u(rng);
        q.f_l = u(rng);
        q.eps = u(rng);
        const FingerSpace a = finger_space(q, -1);
        const FingerSpace b = finger_space(q, 1);
        mirrored += (a.x.lo == -b.x.hi && a.x.hi == -b.x.lo && a.y.lo == b.y.lo && a.y.hi == b.y.hi &&
                     a.z.lo == b.z.lo && a.z.hi == b.z.hi)
                        ? 1
                        : 0;
    }
    std::ostringstream d;
    d << "hand example " << (hand ? "exact" : "mismatch") << ", mirror symmetric " << mirrored << "/1000";
    return {hand && mirrored == 1000, d.str()};
}

// ---- 7: Kalman and closed-loop servo ------------------------------------------

Verdict criterion_7() {
    const TrackerParams tp;
    const double dt = 0.1;
    const double max_step = 0.05;
    int converged = 0;
    int reached = 0;
    int inflation_violations = 0;
    int failures = 0;
    for (int run = 0; run < 100; ++run) {
        std::mt19937_64 rng(7000 + static_cast<std::uint64_t>(run));
        std::normal_distribution<double> n(0.0, 1.0);
        std::bernoulli_distribution lost(0.15);
        const Vec3 offset = 0.04 * Vec3(n(rng), n(rng), n(rng)).normalized();
        const Vec3 target(0.45 + 0.05 * n(rng), 0.05 * n(rng), 0.1 + 0.02 * n(rng));
        Vec3 cmd = target + 0.15 * Vec3(n(rng), n(rng), n(rng)).normalized();
        TrackerState state = make_tracker(cmd, 0.05, 0.02, tp);
        int settled_at = -1;
        bool hit = false;
        for (int step = 1; step <= 50; ++step) {
            const Vec3 actual = cmd + offset;
            std::optional<Vec3> meas;
            if (!lost(rng)) {
                meas = actual + tp.measurement_sigma * Vec3(n(rng), n(rng), n(rng));
            }
            const double before = state.uncertainty();
            state = kalman_step(state, dt, meas);
            if (!meas) {
                ++failures;
                inflation_violations += state.uncertainty() > before ? 0 : 1;
            }
            const ServoCommand sc = servo_correction(state, target, cmd, tp.gain);
            if (const Vec3* next = std::get_if<Vec3>(&sc)) {
                Vec3 delta = *next - cmd;
                if (delta.norm() > max_step) {
                    delta *= max_step / delta.norm();
                }
                cmd += delta;
            }
            const double err = (cmd + offset - target).norm();
            if (err < 0.01) {
                hit = true;
                settled_at = settled_at < 0 ? step : settled_at;
            } else {
                settled_at = -1;
            }
        }
        converged += settled_at > 0 ? 1 : 0;
        reached += hit ? 1 : 0;
    }
    std::ostringstream d;
    d << "trace grew on " << failures - inflation_violations << "/" << failures << " failure steps, converged within 0.01 m in "
      << converged << "/100 runs and stayed there through step 50 (first entered in " << reached << "/100)";
    return {inflation_violations == 0 && failures > 0 && converged >= 95, d.str()};
}

// ---- 8 and 9: end-to-end trials -----------------------------------------------

struct Condition {
    Mode mode;
    double error_mm;
    ExperimentResult result;
};

std::vector<Condition>& trials() {
    static std::vector<Condition> conds;
    if (conds.empty()) {
        Shared& s = shared();
        for (double e : {0.0, 40.0}) {
            for (Mode m : {Mode::NVGG, Mode::VGG}) {
                conds.push_back({m, e, run_experiment(s.world, s.full, s.params, m, e, 50, 1000)});
                std::ofstream f(g_out / ("results_" + std::string(to_string(m)) + "_" +
                                         std::to_string(static_cast<int>(e)) + "mm.csv"));
                write_results_csv(f, conds.back().result.records);
            }
        }
        std::vector<ExperimentStats> rows;
        for (const auto& c : conds) {
            rows.push_back(c.result.stats);
        }
        std::ofstream table(g_out / "outcomes.txt");
        write_stats_table(table, rows);
        write_stats_table(std::cout, rows);
    }
    return conds;
}

const ExperimentStats& stats(Mode m, double e) {
    for (const auto& c : trials()) {
        if (c.mode == m && c.error_mm == e) {
            return c.result.stats;
        }
    }
    throw std::logic_error("missing condition");
}

Verdict criterion_8() {
    const double n0 = stats(Mode::NVGG, 0).success_rate();
    const double v0 = stats(Mode::VGG, 0).success_rate();
    const double n40 = stats(Mode::NVGG, 40).success_rate();
    const double v40 = stats(Mode::VGG, 40).success_rate();
    const double nt_n = stats(Mode::NVGG, 40).frequency(TrialOutcome::ObjectNotTouched);
    const double nt_v = stats(Mode::VGG, 40).frequency(TrialOutcome::ObjectNotTouched);
    const bool a = n0 >= 0.90 && v0 >= 0.90;
    const bool b = v40 - n40 >= 0.15 - 1e-12;
    const bool c = nt_n < nt_v;
    std::ostringstream d;
    d << "(a) " << (a ? "ok" : "FAIL") << " success 0 mm NVGG " << 100 * n0 << "% VGG " << 100 * v0 << "%; (b) "
      << (b ? "ok" : "FAIL") << " 40 mm VGG " << 100 * v40 << "% - NVGG " << 100 * n40 << "% = " << 100 * (v40 - n40)
      << " points; (c) " << (c ? "ok" : "FAIL") << " 40 mm ObjectNotTouched NVGG " << 100 * nt_n << "% VGG "
      << 100 * nt_v << "%";
    return {a && b && c, d.str()};
}

Verdict criterion_9() {
    std::vector<TrialRecord> zero;
    std::vector<TrialRecord> all;
    for (const auto& c : trials()) {
        all.insert(all.end(), c.result.records.begin(), c.result.records.end());
        if (c.error_mm == 0.0) {
            zero.insert(zero.end(), c.result.records.begin(), c.result.records.end());
        }
    }
    const auto bins = convergence_histogram(all, 0.5, 30.0);
    std::ofstream f(g_out / "conv_hist.csv");
    write_histogram_csv(f, bins);
    const double frac = fraction_converged_within(zero, 2.0);
    double slowest = 0.0;
    for (const auto& r : zero) {
        slowest = std::max(slowest, r.convergence_time_s.value_or(0.0));
    }
    std::ostringstream d;
    d << 100 * frac << "% of zero-error detections converged within 2 s (slowest " << slowest << " s)";
    if (frac >= 0.999) {
        d << "; note: simulated detection is uniformly fast, the histogram has no slow tail";
    }
    return {frac >= 0.60, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out-dir" && i + 1 < argc) {
            g_out = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string item;
            while (std::getline(ss, item, ',')) {
                only.insert(std::stoi(item));
            }
        } else {
            std::cerr << "usage: acceptance [--out-dir DIR] [--only 1,2,...]\n";
            return 2;
        }
    }
    fs::create_directories(g_out);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"weighted subset sampling example", criterion_1},
        {"database invariants and update oracle", criterion_2},
        {"matcher invocations bounded by subset size", criterion_3},
        {"position filter oracle and outlier removal", criterion_4},
        {"single ROI with IoU >= 0.6 on 20 placements", criterion_5},
        {"finger spaces and mirror symmetry", criterion_6},
        {"covariance inflation and closed-loop servo", criterion_7},
        {"end-to-end success orderings", criterion_8},
        {"convergence within 2 s", criterion_9},
    };
    int failed = 0;
    std::ostringstream summary;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += v.pass ? 0 : 1;
        char line[64];
        std::snprintf(line, sizeof line, "criterion %d %s (%.1f s): ", id, v.pass ? "PASS" : "FAIL", secs);
        summary << line << criteria[i].first << ": " << v.detail << '\n';
        std::cout << line << criteria[i].first << ": " << v.detail << std::endl;
    }
    std::ofstream(g_out / "acceptance.txt") << summary.str();
    return failed;
}
