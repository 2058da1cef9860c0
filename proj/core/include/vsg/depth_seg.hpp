#pragma once

#include <vector>

#include "vsg/geometry.hpp"
#include "vsg/image.hpp"

namespace vsg {

enum class Direction { Horizontal, Vertical };

/// Parameters of the region-of-interest detector. Derivative thresholds are in
/// mm per pixel (first) and mm per pixel squared (second); radii are half-sizes
/// of square structuring elements.
struct SegParams {
    int k1 = 3;
    int k2 = 6;
    double t1 = 7.0;
    double t2 = 0.6;
    int dilate_mask_r = 4;
    int dilate_close_r = 2;
    int erode_r = 1;
    int min_pixels = 200;
    double expected_width_m = 0.06;
    double expected_height_m = 0.20;
    double size_tol = 0.5;
    /// Superpixels covering more than this fraction of the image border are background.
    double max_border_fraction = 0.25;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

/// Inclusive pixel rectangle.
struct PixelRect {
    int row_min = 0;
    int col_min = 0;
    int row_max = -1;
    int col_max = -1;

    bool empty() const { return row_max < row_min || col_max < col_min; }
    int rows() const { return empty() ? 0 : row_max - row_min + 1; }
    int cols() const { return empty() ? 0 : col_max - col_min + 1; }
    bool contains(int row, int col) const {
        return row >= row_min && row <= row_max && col >= col_min && col <= col_max;
    }
};

struct Superpixel {
    std::vector<PixelCoord> pixels;
    PixelRect bbox;
    double metric_width = 0.0;
    double metric_height = 0.0;
    int median_depth_mm = 0;
    Vec3 centroid_3d = Vec3::Zero();
    /// Unit dominant direction of the back-projected points, oriented with z >= 0.
    Vec3 principal_axis = Vec3::UnitZ();
};

/// Centered difference with span 2k, normalized by 2k: out(i) = (in(i+k) - in(i-k)) / 2k.
/// Cells whose taps leave the grid or touch an invalid (NaN) input are NaN.
/// Throws std::invalid_argument when k < 1 or the grid is not larger than the kernel.
Grid centered_derivative(const Grid& in, int k, Direction dir);

/// Depth converted to a real grid with NaN for no-return pixels.
Grid depth_to_grid(const DepthImage& img);

/// First derivative of depth, mm per pixel.
Grid derivative_1(const DepthImage& img, int k1, Direction dir);

/// Second derivative from a first-derivative grid of the same direction, mm per pixel^2.
Grid derivative_2(const Grid& d1, int k2, Direction dir);

/// Square structuring element of half-size r. Pixels outside the image are ignored.
Mask dilate(const Mask& in, int r);
Mask erode(const Mask& in, int r);

struct EdgeLayers {
    Mask first;      ///< |d1| > t1 in either direction
    Mask exclusion;  ///< dilate(first, dilate_mask_r)
    Mask second;     ///< eroded second-derivative edges outside the exclusion zone
    Mask edges;      ///< first | second
};

EdgeLayers detect_edge_layers(const DepthImage& img, const SegParams& p);
Mask detect_edges(const DepthImage& img, const SegParams& p);

/// 4-connected components of the cells where `free` is set. Blocked cells get -1.
/// Labels are assigned in raster order of each component's first pixel.
Image<int> label_components(const Mask& free, int* count = nullptr);

bool size_matches(const Superpixel& sp, const SegParams& p);

struct Segmentation {
    EdgeLayers layers;
    Mask closed_edges;
    Image<int> labels;
    std::vector<Superpixel> candidates;  ///< survived the pixel-count and border filters
    std::vector<Superpixel> rois;        ///< candidates that also match the expected size
};

Segmentation segment_depth(const DepthImage& img, const CameraModel& cam, const SegParams& p);

std::vector<Superpixel> extract_rois(const DepthImage& img, const CameraModel& cam,
                                     const SegParams& p);

Mask superpixel_mask(const Superpixel& sp, int width, int height);

}  // namespace vsg
