#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "vsg/sim/experiment.hpp"

using namespace vsg;
using namespace vsg::sim;

namespace {

struct Fixture {
    World world;
    TrialParams params;
    ReferenceDatabase full;
    std::vector<Video> videos;
    Frame frame;
    CameraModel cam;

    Fixture() : world(), full(build_reference_db(world, params, 25, 11)), cam(world.default_camera()) {
        videos = record_videos(world, params, 2, 20, 3);
        std::mt19937_64 rng(5);
        SceneState st;
        st.object = 0;
        st.placement = random_placement(world.config(), rng);
        frame = render(world, st, cam, rng);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_Matching(benchmark::State& state, MatchStrategy strategy) {
    const Fixture& f = fixture();
    const auto n = static_cast<std::size_t>(state.range(0));
    const ReferenceDatabase db = database_of_size(f.full, n, f.world.objects().front().id);
    BenchRow row;
    for (auto _ : state) {
        row = bench_matching(f.videos, db, f.params, strategy, 9);
        benchmark::DoNotOptimize(row);
    }
    state.counters["invocations_per_frame"] = row.mean_invocations;
    state.counters["ms_per_frame"] = row.mean_match_ms;
}

void BM_Segmentation(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        auto rois = extract_rois(f.frame.depth, f.cam, f.params.seg);
        benchmark::DoNotOptimize(rois);
    }
}

void BM_RenderFrame(benchmark::State& state) {
    const Fixture& f = fixture();
    std::mt19937_64 rng(1);
    SceneState st;
    st.object = 0;
    for (auto _ : state) {
        Frame fr = render(f.world, st, f.cam, rng);
        benchmark::DoNotOptimize(fr);
    }
}

void BM_DatabaseSampleUpdate(benchmark::State& state) {
    ReferenceDatabase db;
    for (int i = 0; i < state.range(0); ++i) {
        db.insert("o", {});
    }
    std::mt19937_64 rng(2);
    for (auto _ : state) {
        const auto picked = db.sample_subset(5, rng);
        const std::vector<std::size_t> hit(picked.begin(), picked.begin() + 1);
        const std::vector<std::size_t> miss(picked.begin() + 1, picked.end());
        db.update(hit, miss);
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Matching, prob, MatchStrategy::Probabilistic)->DenseRange(10, 100, 30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Matching, all, MatchStrategy::AllReferences)->DenseRange(10, 100, 30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Segmentation)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderFrame)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DatabaseSampleUpdate)->Arg(10)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
