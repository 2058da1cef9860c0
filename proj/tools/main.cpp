#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "vsg/config.hpp"
#include "vsg/refdb_store.hpp"
#include "vsg/sim/experiment.hpp"

namespace fs = std::filesystem;
using namespace vsg;
using namespace vsg::sim;

namespace {

struct Settings {
    SceneConfig scene;
    TrialParams trial;
};

Settings load_settings(const std::string& path) {
    Settings s;
    if (!path.empty()) {
        const Config c = Config::load(path);
        apply(c, s.scene);
        apply(c, s.trial);
    }
    s.trial.validate();
    return s;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

int cmd_segment(const std::string& depth_path, const std::string& params, const std::string& out_dir) {
    const Settings s = load_settings(params);
    const World world(s.scene);
    const CameraModel cam = world.default_camera();
    const DepthImage depth = read_depth_pgm(depth_path);
    if (depth.width() != cam.width() || depth.height() != cam.height()) {
        throw std::runtime_error("depth image size does not match camera.width x camera.height");
    }
    const Segmentation seg = segment_depth(depth, cam, s.trial.seg);
    const fs::path dir = out_dir.empty() ? fs::path(depth_path).parent_path() : fs::path(out_dir);
    const std::string stem = fs::path(depth_path).stem().string();
    if (!dir.empty()) {
        fs::create_directories(dir);
    }
    write_mask_pgm(dir / (stem + "_edges.pgm"), seg.closed_edges);
    for (std::size_t i = 0; i < seg.rois.size(); ++i) {
        write_mask_pgm(dir / (stem + "_roi" + std::to_string(i) + ".pgm"),
                       superpixel_mask(seg.rois[i], depth.width(), depth.height()));
    }
    std::cout << "candidates " << seg.candidates.size() << ", rois " << seg.rois.size() << '\n';
    for (std::size_t i = 0; i < seg.rois.size(); ++i) {
        const Superpixel& r = seg.rois[i];
        std::cout << "roi" << i << ": " << r.pixels.size() << " px, " << r.metric_width << " x "
                  << r.metric_height << " m, depth " << r.median_depth_mm << " mm\n";
    }
    return 0;
}

ReferenceDatabase build_db(const Settings& s, int views, std::uint64_t seed) {
    const World world(s.scene);
    int skipped = 0;
    ReferenceDatabase db = build_reference_db(world, s.trial, views, seed, &skipped);
    std::cerr << "database: " << db.size() << " references, " << skipped << " views skipped\n";
    return db;
}

int cmd_build_db(int views, const std::string& out, std::uint64_t seed, const std::string& params) {
    const Settings s = load_settings(params);
    save_database(out, build_db(s, views, seed));
    return 0;
}

int cmd_run_trials(const std::string& mode, double error_mm, int trials, std::uint64_t seed,
                   const std::string& db_dir, const std::string& out, const std::string& params) {
    const Settings s = load_settings(params);
    const World world(s.scene);
    const ReferenceDatabase db = load_database(db_dir);
    const ExperimentResult res = run_experiment(world, db, s.trial, parse_mode(mode), error_mm, trials, seed);
    std::ofstream f = open_out(out);
    write_results_csv(f, res.records);
    write_stats_table(std::cout, {res.stats});
    return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const int v = std::stoi(item);
        if (v < 1) {
            throw std::invalid_argument("database sizes must be positive");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

int cmd_bench(const std::string& sizes, const std::string& strategy, const std::string& out,
              const std::string& db_dir, int videos, int frames, std::uint64_t seed,
              const std::string& params) {
    const Settings s = load_settings(params);
    const World world(s.scene);
    const ReferenceDatabase full = db_dir.empty() ? build_db(s, 50, seed) : load_database(db_dir);
    const std::vector<Video> recorded = record_videos(world, s.trial, videos, frames, seed);
    const std::string target = world.objects().at(s.trial.target_object).id;
    std::vector<BenchRow> rows;
    for (std::size_t n : parse_sizes(sizes)) {
        rows.push_back(bench_matching(recorded, database_of_size(full, n, target), s.trial,
                                      parse_strategy(strategy), seed + n));
        std::cerr << "n=" << n << " mean invocations/frame " << rows.back().mean_invocations << '\n';
    }
    std::ofstream f = open_out(out);
    write_bench_csv(f, rows);
    return 0;
}

int cmd_histogram(const std::string& in, const std::string& out, double width, double limit) {
    std::ifstream f(in);
    if (!f) {
        throw std::runtime_error("cannot read " + in);
    }
    const std::vector<TrialRecord> records = read_results_csv(f);
    std::ofstream o = open_out(out);
    write_histogram_csv(o, convergence_histogram(records, width, limit));
    std::cout << "converged within 2 s: " << 100.0 * fraction_converged_within(records, 2.0) << "%\n";
    return 0;
}

int cmd_render(std::uint64_t seed, const std::string& out_dir, const std::string& params) {
    const Settings s = load_settings(params);
    const World world(s.scene);
    const CameraModel cam = world.default_camera();
    std::mt19937_64 rng(seed);
    SceneState st;
    st.object = s.trial.target_object;
    st.placement = random_placement(world.config(), rng);
    const Frame f = render(world, st, cam, rng);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_depth_pgm(dir / "depth.pgm", f.depth);
    write_ppm(dir / "color.ppm", f.color);
    write_mask_pgm(dir / "object_mask.pgm", f.object_mask);
    std::cout << "object at (" << st.placement.x << ", " << st.placement.y << ")\n";
    return 0;
}

int cmd_defaults() {
    Config c;
    store(c, SceneConfig{});
    store(c, TrialParams{});
    std::cout << c.to_string();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visually guided grasping simulator"};
    app.require_subcommand(1);

    std::string params;
    std::uint64_t seed = 1;

    auto* seg = app.add_subcommand("segment", "Segment a 16-bit depth PGM into ROI and edge masks");
    std::string depth_path;
    std::string seg_out;
    seg->add_option("depth", depth_path, "Depth image (P5, millimeters)")->required()->check(CLI::ExistingFile);
    seg->add_option("--params", params, "key=value settings file")->check(CLI::ExistingFile);
    seg->add_option("--out-dir", seg_out, "Output directory (default: next to the input)");

    auto* bdb = app.add_subcommand("build-db", "Render reference views and store the database");
    int views = 50;
    std::string db_out;
    bdb->add_option("--views", views, "Views per object")->capture_default_str();
    bdb->add_option("--out", db_out, "Database directory")->required();
    bdb->add_option("--seed", seed, "Render seed")->capture_default_str();
    bdb->add_option("--params", params, "key=value settings file")->check(CLI::ExistingFile);

    auto* rt = app.add_subcommand("run-trials", "Run grasping trials and write results.csv");
    std::string mode;
    double error_mm = 0.0;
    int trials = 50;
    std::string db_dir;
    std::string out;
    rt->add_option("--mode", mode, "vgg or nvgg")->required()->check(CLI::IsMember({"vgg", "nvgg", "VGG", "NVGG"}));
    rt->add_option("--model-error-mm", error_mm, "Injected camera-to-arm error")->capture_default_str();
    rt->add_option("--trials", trials, "Number of trials")->capture_default_str()->check(CLI::PositiveNumber);
    rt->add_option("--seed", seed, "First trial seed")->capture_default_str();
    rt->add_option("--db", db_dir, "Database directory")->required()->check(CLI::ExistingDirectory);
    rt->add_option("--out", out, "results.csv")->required();
    rt->add_option("--params", params, "key=value settings file")->check(CLI::ExistingFile);

    auto* bm = app.add_subcommand("bench-matching", "Matcher invocations per frame against database size");
    std::string sizes = "10,20,30,40,50,60,70,80,90,100";
    std::string strategy = "prob";
    int videos = 20;
    int frames = 200;
    bm->add_option("--db-sizes", sizes, "Comma-separated database sizes")->capture_default_str();
    bm->add_option("--strategy", strategy, "prob or all")->capture_default_str()->check(CLI::IsMember({"prob", "all"}));
    bm->add_option("--out", out, "bench.csv")->required();
    bm->add_option("--db", db_dir, "Database directory (default: build 50 views)")->check(CLI::ExistingDirectory);
    bm->add_option("--videos", videos, "Recorded videos")->capture_default_str()->check(CLI::PositiveNumber);
    bm->add_option("--frames", frames, "Frames per video")->capture_default_str()->check(CLI::PositiveNumber);
    bm->add_option("--seed", seed, "Recording seed")->capture_default_str();
    bm->add_option("--params", params, "key=value settings file")->check(CLI::ExistingFile);

    auto* hist = app.add_subcommand("histogram", "Convergence-time histogram from results.csv");
    std::string in;
    double width = 0.5;
    double limit = 30.0;
    hist->add_option("--in", in, "results.csv")->required()->check(CLI::ExistingFile);
    hist->add_option("--out", out, "conv_hist.csv")->required();
    hist->add_option("--bin-width", width, "Seconds per bin")->capture_default_str();
    hist->add_option("--max", limit, "Last bin end, seconds")->capture_default_str();

    auto* rnd = app.add_subcommand("render", "Render one synthetic RGB-D frame of the target object");
    std::string render_out;
    rnd->add_option("--seed", seed, "Placement and noise seed")->capture_default_str();
    rnd->add_option("--out-dir", render_out, "Output directory")->required();
    rnd->add_option("--params", params, "key=value settings file")->check(CLI::ExistingFile);

    auto* defs = app.add_subcommand("defaults", "Print every setting with its default value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*seg) {
            return cmd_segment(depth_path, params, seg_out);
        }
        if (*bdb) {
            return cmd_build_db(views, db_out, seed, params);
        }
        if (*rt) {
            return cmd_run_trials(mode, error_mm, trials, seed, db_dir, out, params);
        }
        if (*bm) {
            return cmd_bench(sizes, strategy, out, db_dir, videos, frames, seed, params);
        }
        if (*hist) {
            return cmd_histogram(in, out, width, limit);
        }
        if (*rnd) {
            return cmd_render(seed, render_out, params);
        }
        if (*defs) {
            return cmd_defaults();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
