#include <cmath>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "vsg/depth_seg.hpp"
#include "vsg/sim/trial.hpp"

using namespace vsg;

namespace {

Grid row_grid(const std::vector<double>& values) {
    Grid g(static_cast<int>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        g.at(0, static_cast<int>(i)) = values[i];
    }
    return g;
}

DepthImage constant_depth(int w, int h, std::uint16_t v) { return DepthImage(w, h, v); }

// Brute-force dilation oracle.
Mask dilate_oracle(const Mask& in, int r) {
    Mask out(in.width(), in.height(), 0);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    if (in.contains(y + dy, x + dx) && in.at(y + dy, x + dx)) {
                        out.at(y, x) = 1;
                    }
                }
            }
        }
    }
    return out;
}

Mask random_mask(std::mt19937_64& rng, int w, int h, double p) {
    std::bernoulli_distribution b(p);
    Mask m(w, h, 0);
    for (auto& v : m.data()) {
        v = b(rng) ? 1 : 0;
    }
    return m;
}

double iou(const Mask& a, const Mask& b) {
    long inter = 0;
    long uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a.data()[i] && b.data()[i]) ? 1 : 0;
        uni += (a.data()[i] || b.data()[i]) ? 1 : 0;
    }
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct SimShot {
    sim::World world;
    CameraModel cam;
    sim::Frame frame;
};

SimShot shot(std::uint64_t seed) {
    SimShot s{sim::World{}, {}, {}};
    s.cam = s.world.default_camera();
    std::mt19937_64 rng(seed);
    sim::SceneState st;
    st.object = 0;
    st.placement = sim::random_placement(s.world.config(), rng);
    s.frame = sim::render(s.world, st, s.cam, rng);
    return s;
}

}  // namespace

TEST(CenteredDerivative, ConstantRowIsZero) {
    const Grid d = centered_derivative(row_grid({500, 500, 500, 500, 500}), 1, Direction::Horizontal);
    for (int c = 1; c < 4; ++c) {
        EXPECT_DOUBLE_EQ(d.at(0, c), 0.0);
    }
    EXPECT_TRUE(std::isnan(d.at(0, 0)));
    EXPECT_TRUE(std::isnan(d.at(0, 4)));
}

TEST(CenteredDerivative, StepHandValue) {
    const Grid d = centered_derivative(row_grid({500, 500, 800, 800}), 1, Direction::Horizontal);
    EXPECT_DOUBLE_EQ(d.at(0, 1), 150.0);
    EXPECT_DOUBLE_EQ(d.at(0, 2), 150.0);
}

TEST(CenteredDerivative, NanPropagatesAndBadKernelThrows) {
    const Grid d = centered_derivative(row_grid({1, 2, NAN, 4, 5, 6}), 1, Direction::Horizontal);
    EXPECT_TRUE(std::isnan(d.at(0, 1)));
    EXPECT_TRUE(std::isnan(d.at(0, 3)));
    EXPECT_DOUBLE_EQ(d.at(0, 4), 1.0);
    EXPECT_THROW(centered_derivative(row_grid({1, 2, 3}), 0, Direction::Horizontal), std::invalid_argument);
    EXPECT_THROW(centered_derivative(row_grid({1, 2}), 1, Direction::Horizontal), std::invalid_argument);
}

TEST(CenteredDerivative, VerticalMatchesTransposedHorizontal) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(400, 900);
    Grid g(9, 13);
    Grid t(13, 9);
    for (int r = 0; r < 13; ++r) {
        for (int c = 0; c < 9; ++c) {
            g.at(r, c) = t.at(c, r) = u(rng);
        }
    }
    const Grid v = centered_derivative(g, 2, Direction::Vertical);
    const Grid h = centered_derivative(t, 2, Direction::Horizontal);
    for (int r = 2; r < 11; ++r) {
        for (int c = 0; c < 9; ++c) {
            EXPECT_DOUBLE_EQ(v.at(r, c), h.at(c, r));
        }
    }
}

TEST(SecondDerivative, LinearRampIsZero) {
    DepthImage img(12, 1);
    for (int c = 0; c < 12; ++c) {
        img.at(0, c) = static_cast<std::uint16_t>(500 + 20 * c);
    }
    const Grid d2 = derivative_2(derivative_1(img, 1, Direction::Horizontal), 1, Direction::Horizontal);
    for (int c = 2; c < 10; ++c) {
        EXPECT_DOUBLE_EQ(d2.at(0, c), 0.0);
    }
}

TEST(SecondDerivative, CreaseHandValue) {
    DepthImage img(6, 1);
    const std::uint16_t row[] = {500, 500, 500, 520, 540, 560};
    for (int c = 0; c < 6; ++c) {
        img.at(0, c) = row[c];
    }
    const Grid d1 = derivative_1(img, 1, Direction::Horizontal);
    // d1 = [nan, 0, 10, 20, 20, nan]; d2(2) = (20 - 0) / 2.
    EXPECT_DOUBLE_EQ(d1.at(0, 2), 10.0);
    const Grid d2 = derivative_2(d1, 1, Direction::Horizontal);
    EXPECT_DOUBLE_EQ(d2.at(0, 2), 10.0);
    EXPECT_GT(d2.at(0, 2), 0.0);
}

TEST(Morphology, DilateMatchesBruteForce) {
    std::mt19937_64 rng(7);
    for (int r = 0; r <= 3; ++r) {
        const Mask m = random_mask(rng, 23, 17, 0.05);
        EXPECT_EQ(dilate(m, r).data(), dilate_oracle(m, r).data());
    }
}

TEST(Morphology, ErodeIsDualOfDilate) {
    std::mt19937_64 rng(8);
    for (int r = 1; r <= 3; ++r) {
        const Mask m = random_mask(rng, 21, 19, 0.7);
        Mask inv = m;
        for (auto& v : inv.data()) {
            v = v ? 0 : 1;
        }
        Mask expect = dilate_oracle(inv, r);
        for (auto& v : expect.data()) {
            v = v ? 0 : 1;
        }
        EXPECT_EQ(erode(m, r).data(), expect.data());
    }
}

TEST(Morphology, DilateIsExtensiveErodeAntiExtensive) {
    std::mt19937_64 rng(9);
    const Mask m = random_mask(rng, 30, 30, 0.3);
    const Mask d = dilate(m, 2);
    const Mask e = erode(m, 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_GE(d.data()[i], m.data()[i]);
        EXPECT_LE(e.data()[i], m.data()[i]);
    }
}

TEST(DetectEdges, FlatPlaneHasNoInteriorEdges) {
    const SegParams p;
    const Mask m = detect_edges(constant_depth(40, 30, 1200), p);
    for (int r = p.k1 + p.k2; r < 30 - p.k1 - p.k2; ++r) {
        for (int c = p.k1 + p.k2; c < 40 - p.k1 - p.k2; ++c) {
            EXPECT_EQ(m.at(r, c), 0);
        }
    }
}

TEST(DetectEdges, StepEdgeIsFirstOrderOnly) {
    SegParams p;
    p.k1 = 2;
    p.k2 = 3;
    p.t1 = 50.0;
    p.t2 = 1.0;
    p.dilate_mask_r = 4;
    DepthImage img(40, 30, 1000);
    for (int r = 0; r < 30; ++r) {
        for (int c = 20; c < 40; ++c) {
            img.at(r, c) = 1300;
        }
    }
    const EdgeLayers L = detect_edge_layers(img, p);
    for (int r = 5; r < 25; ++r) {
        EXPECT_EQ(L.first.at(r, 19), 1);
        EXPECT_EQ(L.first.at(r, 20), 1);
        for (int c = 10; c < 30; ++c) {
            EXPECT_EQ(L.second.at(r, c), 0);
        }
    }
}

TEST(DetectEdges, CylinderContourIsClosed) {
    const SimShot s = shot(1000);
    const Segmentation seg = segment_depth(s.frame.depth, s.cam, SegParams{});
    // Flood from the object's interior through non-edge, valid-depth pixels must not reach the image border.
    const Mask& obj = s.frame.object_mask;
    const auto open = [&](PixelCoord n) { return !seg.closed_edges[n] && s.frame.depth[n] != 0; };
    const Mask core = erode(obj, 3);
    PixelCoord seed{-1, -1};
    for (int r = 0; r < core.height() && seed.row < 0; ++r) {
        for (int c = 0; c < core.width(); ++c) {
            if (core.at(r, c) && open({r, c})) {
                seed = {r, c};
                break;
            }
        }
    }
    ASSERT_GE(seed.row, 0);
    Mask seen(obj.width(), obj.height(), 0);
    std::queue<PixelCoord> q;
    q.push(seed);
    seen[seed] = 1;
    bool leaked = false;
    while (!q.empty()) {
        const PixelCoord p = q.front();
        q.pop();
        if (p.row == 0 || p.col == 0 || p.row == obj.height() - 1 || p.col == obj.width() - 1) {
            leaked = true;
            break;
        }
        for (const PixelCoord n : {PixelCoord{p.row - 1, p.col}, PixelCoord{p.row + 1, p.col},
                                   PixelCoord{p.row, p.col - 1}, PixelCoord{p.row, p.col + 1}}) {
            if (!seen[n] && open(n)) {
                seen[n] = 1;
                q.push(n);
            }
        }
    }
    EXPECT_FALSE(leaked);
}

TEST(LabelComponents, RasterOrderAndConnectivity) {
    Mask free(5, 3, 0);
    // Two components; diagonal contact does not join them.
    free.at(0, 3) = free.at(0, 4) = 1;
    free.at(1, 2) = 1;
    free.at(2, 0) = free.at(2, 1) = free.at(2, 2) = 1;
    int count = 0;
    const Image<int> lab = label_components(free, &count);
    EXPECT_EQ(count, 2);
    EXPECT_EQ(lab.at(0, 3), 0);
    EXPECT_EQ(lab.at(0, 4), 0);
    EXPECT_EQ(lab.at(1, 2), 1);
    EXPECT_EQ(lab.at(2, 0), 1);
    EXPECT_EQ(lab.at(0, 0), -1);
}

TEST(ExtractRois, AllInvalidImageGivesNothing) {
    const sim::World w;
    EXPECT_TRUE(extract_rois(DepthImage(320, 240, 0), w.default_camera(), SegParams{}).empty());
}

TEST(ExtractRois, SingleCylinderMatchesGroundTruth) {
    const SimShot s = shot(1003);
    const auto rois = extract_rois(s.frame.depth, s.cam, SegParams{});
    ASSERT_EQ(rois.size(), 1u);
    const Mask m = superpixel_mask(rois[0], s.cam.width(), s.cam.height());
    EXPECT_GE(iou(m, s.frame.object_mask), 0.6);
    EXPECT_NEAR(rois[0].metric_width, 0.06, 0.03);
    EXPECT_NEAR(rois[0].metric_height, 0.20, 0.10);
    EXPECT_GT(std::abs(rois[0].principal_axis.z()), 0.8);
}

TEST(ExtractRois, MismatchedExpectedSizeRejects) {
    const SimShot s = shot(1003);
    SegParams p;
    p.expected_width_m = 0.30;
    p.expected_height_m = 0.30;
    p.size_tol = 0.2;
    EXPECT_TRUE(extract_rois(s.frame.depth, s.cam, p).empty());
}

TEST(ExtractRois, BareTableIsRejected) {
    const sim::World w;
    const CameraModel cam = w.default_camera();
    std::mt19937_64 rng(4);
    const sim::Frame f = sim::render(w, sim::SceneState{}, cam, rng);
    const Segmentation seg = segment_depth(f.depth, cam, SegParams{});
    EXPECT_TRUE(seg.rois.empty());
}

TEST(ExtractRois, SuperpixelInvariants) {
    const SimShot s = shot(1007);
    const Segmentation seg = segment_depth(s.frame.depth, s.cam, SegParams{});
    for (const auto& sp : seg.candidates) {
        ASSERT_FALSE(sp.pixels.empty());
        EXPECT_GT(sp.metric_width, 0.0);
        EXPECT_GT(sp.metric_height, 0.0);
        EXPECT_NEAR(sp.principal_axis.norm(), 1.0, 1e-9);
        EXPECT_GE(sp.principal_axis.z(), 0.0);
        const int label = seg.labels[sp.pixels.front()];
        for (const auto& p : sp.pixels) {
            EXPECT_EQ(seg.labels[p], label);
            EXPECT_TRUE(sp.bbox.contains(p.row, p.col));
        }
    }
}

TEST(SegParams, ValidateRejectsBadValues) {
    SegParams p;
    p.k1 = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.t2 = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.size_tol = 1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}
