#include "vsg/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/LU>

#include "vsg/refdb.hpp"

namespace vsg {
namespace {

double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

// Similarity taking the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Eigen::Vector2d, 4> pts) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : pts) {
        c += p;
    }
    c /= 4.0;
    double mean = 0.0;
    for (const auto& p : pts) {
        mean += (p - c).norm();
    }
    mean /= 4.0;
    const double s = mean > 0.0 ? std::sqrt(2.0) / mean : 1.0;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t(0, 2) = -s * c.x();
    t(1, 2) = -s * c.y();
    return t;
}

bool has_collinear_triple(const std::array<Eigen::Vector2d, 4>& p) {
    constexpr int triples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto& t : triples) {
        const Eigen::Vector2d a = p[t[1]] - p[t[0]];
        const Eigen::Vector2d b = p[t[2]] - p[t[0]];
        if (std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-6) {
            return true;
        }
    }
    return false;
}

Eigen::Vector2d to_xy(const PixelCoord& p) { return {static_cast<double>(p.col), static_cast<double>(p.row)}; }

}  // namespace

std::vector<MatchPair> match_descriptors(std::span<const Keypoint> ref_kps,
                                         std::span<const Keypoint> roi_kps, double ratio) {
    if (ref_kps.empty() || roi_kps.empty()) {
        return {};
    }
    const std::size_t dim = ref_kps.front().descriptor.size();
    for (const auto& k : ref_kps) {
        if (k.descriptor.size() != dim) {
            throw std::invalid_argument("match_descriptors: inconsistent descriptor length");
        }
    }
    for (const auto& k : roi_kps) {
        if (k.descriptor.size() != dim) {
            throw std::invalid_argument("match_descriptors: descriptor lengths differ");
        }
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // Best claim on each ROI keypoint: (squared distance, reference index).
    std::vector<std::pair<double, int>> claim(roi_kps.size(), {kInf, -1});
    const double ratio_sq = ratio * ratio;
    for (std::size_t i = 0; i < ref_kps.size(); ++i) {
        double best = kInf;
        double second = kInf;
        int best_j = -1;
        for (std::size_t j = 0; j < roi_kps.size(); ++j) {
            const double d = squared_distance(ref_kps[i].descriptor, roi_kps[j].descriptor);
            if (d < best) {
                second = best;
                best = d;
                best_j = static_cast<int>(j);
            } else if (d < second) {
                second = d;
            }
        }
        if (best_j < 0) {
            continue;
        }
        const bool passes = second == kInf || best < ratio_sq * second;
        if (!passes) {
            continue;
        }
        auto& c = claim[static_cast<std::size_t>(best_j)];
        if (best < c.first) {
            c = {best, static_cast<int>(i)};
        }
    }
    std::vector<MatchPair> out;
    for (std::size_t j = 0; j < claim.size(); ++j) {
        if (claim[j].second >= 0) {
            out.push_back({claim[j].second, static_cast<int>(j)});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.ref_index < b.ref_index; });
    return out;
}

std::optional<Eigen::Matrix3d> homography_from_4(std::span<const Eigen::Vector2d, 4> from,
                                                 std::span<const Eigen::Vector2d, 4> to) {
    const Eigen::Matrix3d t1 = normalizer(from);
    const Eigen::Matrix3d t2 = normalizer(to);
    std::array<Eigen::Vector2d, 4> a;
    std::array<Eigen::Vector2d, 4> b;
    for (int i = 0; i < 4; ++i) {
        a[i] = (t1 * from[i].homogeneous()).hnormalized();
        b[i] = (t2 * to[i].homogeneous()).hnormalized();
    }
    if (has_collinear_triple(a) || has_collinear_triple(b)) {
        return std::nullopt;
    }
    Eigen::Matrix<double, 8, 8> m;
    Eigen::Matrix<double, 8, 1> rhs;
    for (int i = 0; i < 4; ++i) {
        const double x = a[i].x();
        const double y = a[i].y();
        const double u = b[i].x();
        const double v = b[i].y();
        m.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        m.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        rhs(2 * i) = u;
        rhs(2 * i + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(m);
    if (lu.rank() < 8) {
        return std::nullopt;
    }
    const Eigen::Matrix<double, 8, 1> h = lu.solve(rhs);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    Eigen::Matrix3d out = t2.inverse() * hn * t1;
    if (!out.allFinite() || std::abs(out(2, 2)) < 1e-15) {
        return std::nullopt;
    }
    out /= out(2, 2);
    return out;
}

double transfer_error(const Eigen::Matrix3d& h, const Eigen::Vector2d& from,
                      const Eigen::Vector2d& to) {
    const Eigen::Vector3d p = h * from.homogeneous();
    if (std::abs(p.z()) < 1e-12) {
        return std::numeric_limits<double>::infinity();
    }
    return (p.hnormalized() - to).norm();
}

MatchResult ransac_homography(std::span<const PixelPair> pairs_px, int iters, double inlier_px,
                              std::uint64_t seed, double confidence) {
    MatchResult res;
    const std::size_t n = pairs_px.size();
    res.inliers.assign(n, false);
    std::vector<Eigen::Vector2d> from(n);
    std::vector<Eigen::Vector2d> to(n);
    for (std::size_t i = 0; i < n; ++i) {
        from[i] = to_xy(pairs_px[i].first);
        to[i] = to_xy(pairs_px[i].second);
    }

    if (n < 4) {
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d t = to[i] - from[i];
            std::vector<bool> mask(n, false);
            int count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if ((from[j] + t - to[j]).norm() < inlier_px) {
                    mask[j] = true;
                    ++count;
                }
            }
            if (count > res.inlier_count) {
                res.inlier_count = count;
                res.inliers = std::move(mask);
            }
        }
        return res;
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<bool> mask(n);
    int needed = iters;
    for (int it = 0; it < std::min(iters, needed); ++it) {
        std::array<std::size_t, 4> idx{};
        for (int k = 0; k < 4; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = pick(rng);
                fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
            }
        }
        std::array<Eigen::Vector2d, 4> a;
        std::array<Eigen::Vector2d, 4> b;
        for (int k = 0; k < 4; ++k) {
            a[k] = from[idx[k]];
            b[k] = to[idx[k]];
        }
        const auto h = homography_from_4(a, b);
        if (!h) {
            continue;
        }
        int count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            mask[j] = transfer_error(*h, from[j], to[j]) < inlier_px;
            count += mask[j] ? 1 : 0;
        }
        if (count > res.inlier_count) {
            res.inlier_count = count;
            res.inliers = mask;
            res.homography = *h;
            if (confidence < 1.0) {
                // Standard adaptive stop once an all-inlier sample is likely to have been drawn.
                const double w = static_cast<double>(count) / static_cast<double>(n);
                const double miss = 1.0 - w * w * w * w;
                if (miss <= 0.0) {
                    needed = 0;
                } else {
                    const double k = std::log(1.0 - confidence) / std::log(miss);
                    needed = static_cast<int>(std::min<double>(iters, std::ceil(k)));
                }
            }
        }
    }
    if (res.inlier_count < 4) {
        // Only degenerate samples were drawn.
        res.inlier_count = 0;
        res.inliers.assign(n, false);
        res.homography.reset();
    }
    return res;
}

std::vector<Keypoint> keypoints_in(const Superpixel& roi, std::span<const Keypoint> kps) {
    const auto raster_less = [](const PixelCoord& a, const PixelCoord& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    };
    std::vector<Keypoint> out;
    for (const auto& k : kps) {
        if (!roi.bbox.contains(k.px.row, k.px.col)) {
            continue;
        }
        if (std::binary_search(roi.pixels.begin(), roi.pixels.end(), k.px, raster_less)) {
            out.push_back(k);
        }
    }
    return out;
}

MatchResult match_reference_to_roi(const Reference& ref, const Superpixel& roi,
                                   std::span<const Keypoint> roi_kps, const MatchParams& params) {
    const std::vector<Keypoint> inside = keypoints_in(roi, roi_kps);
    std::vector<MatchPair> pairs = match_descriptors(ref.keypoints, inside, params.ratio);

    std::vector<PixelPair> px;
    px.reserve(pairs.size());
    for (const auto& p : pairs) {
        px.emplace_back(ref.keypoints[static_cast<std::size_t>(p.ref_index)].px,
                        inside[static_cast<std::size_t>(p.roi_index)].px);
    }
    MatchResult res = ransac_homography(px, params.ransac_iters, params.inlier_px, params.seed, params.confidence);
    res.pairs = std::move(pairs);
    res.success = res.inlier_count >= params.match_min;
    return res;
}

}  // namespace vsg
