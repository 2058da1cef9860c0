#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vsg/depth_seg.hpp"
#include "vsg/geometry.hpp"

namespace vsg {

inline constexpr int kDefaultDescriptorLength = 16;

struct Keypoint {
    PixelCoord px;
    std::vector<float> descriptor;
    float scale = 1.0f;
};

struct MatchPair {
    int ref_index = 0;
    int roi_index = 0;

    friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

using PixelPair = std::pair<PixelCoord, PixelCoord>;

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<bool> inliers;  ///< parallel to `pairs`
    int inlier_count = 0;
    std::optional<Eigen::Matrix3d> homography;  ///< maps reference pixels to ROI pixels
    bool success = false;
};

struct MatchParams {
    double ratio = 0.8;
    int ransac_iters = 200;
    double inlier_px = 3.0;
    int match_min = 8;
    std::uint64_t seed = 0;
    /// Early-exit confidence for RANSAC; 1 runs all iterations.
    double confidence = 0.99;
};

/// Nearest-neighbor matching with the ratio test. Each reference keypoint is
/// paired with its nearest ROI keypoint when nearest / second-nearest < ratio
/// (a lone ROI keypoint always passes). ROI keypoints are used at most once;
/// the smaller distance keeps the pair. Throws std::invalid_argument on
/// mismatched descriptor lengths.
std::vector<MatchPair> match_descriptors(std::span<const Keypoint> ref_kps,
                                         std::span<const Keypoint> roi_kps, double ratio = 0.8);

/// Homography through four correspondences using Hartley-normalized DLT.
/// Empty for degenerate (near-collinear) samples.
std::optional<Eigen::Matrix3d> homography_from_4(std::span<const Eigen::Vector2d, 4> from,
                                                 std::span<const Eigen::Vector2d, 4> to);

/// Reprojection error of `h` on one correspondence, pixels.
double transfer_error(const Eigen::Matrix3d& h, const Eigen::Vector2d& from,
                      const Eigen::Vector2d& to);

/// Four-point RANSAC. With fewer than four pairs the homography is absent and
/// the count is the largest set agreeing with a single pair's translation.
/// Deterministic for a fixed seed. `pairs` / `success` of the result are left
/// for the caller. `iters` is an upper bound: sampling stops once an
/// all-inlier sample has been drawn with probability `confidence` (< 1).
MatchResult ransac_homography(std::span<const PixelPair> pairs_px, int iters, double inlier_px,
                              std::uint64_t seed, double confidence = 1.0);

/// Supplies keypoints found inside a region of the current frame. The shipped
/// implementation is the simulator's procedural texture.
class DescriptorSource {
public:
    virtual ~DescriptorSource() = default;
    virtual std::vector<Keypoint> extract(const Superpixel& region) const = 0;
};

struct Reference;

/// Ratio-test matching followed by RANSAC; succeeds when the inlier count
/// reaches `match_min`. The inlier count is the detection quality.
MatchResult match_reference_to_roi(const Reference& ref, const Superpixel& roi,
                                   std::span<const Keypoint> roi_kps, const MatchParams& params);

/// Keypoints whose pixel belongs to `roi` (superpixel pixels are in raster order).
std::vector<Keypoint> keypoints_in(const Superpixel& roi, std::span<const Keypoint> kps);

}  // namespace vsg
