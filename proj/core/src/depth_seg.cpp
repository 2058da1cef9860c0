#include "vsg/depth_seg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace vsg {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Mask union_of(const Mask& a, const Mask& b) {
    Mask out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = static_cast<std::uint8_t>(a.data()[i] | b.data()[i]);
    }
    return out;
}

// Separable running max (dilate) or min (erode) over a (2r+1) window along one axis.
template <bool kDilate>
Mask morph_pass(const Mask& in, int r, Direction dir) {
    Mask out(in.width(), in.height());
    const int h = in.height();
    const int w = in.width();
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            std::uint8_t acc = kDilate ? 0 : 1;
            for (int d = -r; d <= r; ++d) {
                const int rr = dir == Direction::Vertical ? row + d : row;
                const int cc = dir == Direction::Horizontal ? col + d : col;
                if (!in.contains(rr, cc)) {
                    continue;
                }
                const std::uint8_t v = in.at(rr, cc);
                if constexpr (kDilate) {
                    if (v) {
                        acc = 1;
                        break;
                    }
                } else {
                    if (!v) {
                        acc = 0;
                        break;
                    }
                }
            }
            out.at(row, col) = acc;
        }
    }
    return out;
}

Superpixel describe(std::vector<PixelCoord> pixels, const DepthImage& img, const CameraModel& cam) {
    Superpixel sp;
    sp.bbox = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
    std::vector<std::uint16_t> depths;
    depths.reserve(pixels.size());
    for (const auto& px : pixels) {
        sp.bbox.row_min = std::min(sp.bbox.row_min, px.row);
        sp.bbox.row_max = std::max(sp.bbox.row_max, px.row);
        sp.bbox.col_min = std::min(sp.bbox.col_min, px.col);
        sp.bbox.col_max = std::max(sp.bbox.col_max, px.col);
        depths.push_back(img[px]);
    }
    auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
    std::nth_element(depths.begin(), mid, depths.end());
    sp.median_depth_mm = *mid;

    const int row_c = (sp.bbox.row_min + sp.bbox.row_max) / 2;
    const int col_c = (sp.bbox.col_min + sp.bbox.col_max) / 2;
    const int d = sp.median_depth_mm;
    sp.metric_width = (back_project(cam, {row_c, sp.bbox.col_max}, d) -
                       back_project(cam, {row_c, sp.bbox.col_min}, d))
                          .norm();
    sp.metric_height = (back_project(cam, {sp.bbox.row_max, col_c}, d) -
                        back_project(cam, {sp.bbox.row_min, col_c}, d))
                           .norm();

    Vec3 sum = Vec3::Zero();
    std::vector<Vec3> pts;
    pts.reserve(pixels.size());
    for (const auto& px : pixels) {
        pts.push_back(back_project(cam, px, img[px]));
        sum += pts.back();
    }
    sp.centroid_3d = sum / static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) {
        const Vec3 c = p - sp.centroid_3d;
        cov += c * c.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 axis = eig.eigenvectors().col(2);
    if (axis.z() < 0.0) {
        axis = -axis;
    }
    sp.principal_axis = axis.normalized();
    sp.pixels = std::move(pixels);
    return sp;
}

}  // namespace

void SegParams::validate() const {
    if (k1 < 1 || k2 < 1) {
        throw std::invalid_argument("SegParams: k1 and k2 must be >= 1");
    }
    if (!(t1 > 0.0) || !(t2 > 0.0)) {
        throw std::invalid_argument("SegParams: thresholds must be positive");
    }
    if (dilate_mask_r < 0 || dilate_close_r < 0 || erode_r < 0 || min_pixels < 1) {
        throw std::invalid_argument("SegParams: negative radius or empty min_pixels");
    }
    if (!(size_tol > 0.0 && size_tol < 1.0)) {
        throw std::invalid_argument("SegParams: size_tol must lie in (0, 1)");
    }
    if (!(expected_width_m > 0.0) || !(expected_height_m > 0.0)) {
        throw std::invalid_argument("SegParams: expected sizes must be positive");
    }
}

Grid centered_derivative(const Grid& in, int k, Direction dir) {
    if (k < 1) {
        throw std::invalid_argument("centered_derivative: k must be >= 1");
    }
    const int span = dir == Direction::Horizontal ? in.width() : in.height();
    if (span <= 2 * k) {
        throw std::invalid_argument("centered_derivative: image not larger than the kernel");
    }
    Grid out(in.width(), in.height(), kNaN);
    const double norm = 1.0 / (2.0 * k);
    for (int row = 0; row < in.height(); ++row) {
        for (int col = 0; col < in.width(); ++col) {
            double lo = kNaN;
            double hi = kNaN;
            if (dir == Direction::Horizontal) {
                if (col - k < 0 || col + k >= in.width()) {
                    continue;
                }
                lo = in.at(row, col - k);
                hi = in.at(row, col + k);
            } else {
                if (row - k < 0 || row + k >= in.height()) {
                    continue;
                }
                lo = in.at(row - k, col);
                hi = in.at(row + k, col);
            }
            out.at(row, col) = (hi - lo) * norm;  // NaN propagates
        }
    }
    return out;
}

Grid depth_to_grid(const DepthImage& img) {
    Grid g(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto v = img.data()[i];
        g.data()[i] = v == 0 ? kNaN : static_cast<double>(v);
    }
    return g;
}

Grid derivative_1(const DepthImage& img, int k1, Direction dir) {
    return centered_derivative(depth_to_grid(img), k1, dir);
}

Grid derivative_2(const Grid& d1, int k2, Direction dir) { return centered_derivative(d1, k2, dir); }

Mask dilate(const Mask& in, int r) {
    if (r <= 0) {
        return in;
    }
    return morph_pass<true>(morph_pass<true>(in, r, Direction::Horizontal), r, Direction::Vertical);
}

Mask erode(const Mask& in, int r) {
    if (r <= 0) {
        return in;
    }
    return morph_pass<false>(morph_pass<false>(in, r, Direction::Horizontal), r,
                             Direction::Vertical);
}

EdgeLayers detect_edge_layers(const DepthImage& img, const SegParams& p) {
    p.validate();
    const int w = img.width();
    const int h = img.height();
    EdgeLayers out;
    out.first = Mask(w, h);
    Mask second_raw(w, h);
    const Grid depth = depth_to_grid(img);
    for (Direction dir : {Direction::Horizontal, Direction::Vertical}) {
        const Grid d1 = centered_derivative(depth, p.k1, dir);
        const Grid d2 = centered_derivative(d1, p.k2, dir);
        for (std::size_t i = 0; i < d1.size(); ++i) {
            if (std::abs(d1.data()[i]) > p.t1) {
                out.first.data()[i] = 1;
            }
            if (std::abs(d2.data()[i]) > p.t2) {
                second_raw.data()[i] = 1;
            }
        }
    }
    out.exclusion = dilate(out.first, p.dilate_mask_r);
    for (std::size_t i = 0; i < second_raw.size(); ++i) {
        if (out.exclusion.data()[i]) {
            second_raw.data()[i] = 0;
        }
    }
    out.second = erode(second_raw, p.erode_r);
    out.edges = union_of(out.first, out.second);
    return out;
}

Mask detect_edges(const DepthImage& img, const SegParams& p) { return detect_edge_layers(img, p).edges; }

Image<int> label_components(const Mask& free, int* count) {
    Image<int> labels(free.width(), free.height(), -1);
    std::vector<PixelCoord> stack;
    int next = 0;
    for (int row = 0; row < free.height(); ++row) {
        for (int col = 0; col < free.width(); ++col) {
            if (!free.at(row, col) || labels.at(row, col) >= 0) {
                continue;
            }
            labels.at(row, col) = next;
            stack.push_back({row, col});
            while (!stack.empty()) {
                const PixelCoord px = stack.back();
                stack.pop_back();
                const PixelCoord nbrs[4] = {{px.row - 1, px.col},
                                            {px.row + 1, px.col},
                                            {px.row, px.col - 1},
                                            {px.row, px.col + 1}};
                for (const auto& n : nbrs) {
                    if (free.contains(n) && free[n] && labels[n] < 0) {
                        labels[n] = next;
                        stack.push_back(n);
                    }
                }
            }
            ++next;
        }
    }
    if (count) {
        *count = next;
    }
    return labels;
}

bool size_matches(const Superpixel& sp, const SegParams& p) {
    const auto within = [&](double v, double expected) {
        return std::abs(v - expected) <= p.size_tol * expected;
    };
    return within(sp.metric_width, p.expected_width_m) &&
           within(sp.metric_height, p.expected_height_m);
}

Segmentation segment_depth(const DepthImage& img, const CameraModel& cam, const SegParams& p) {
    if (img.width() != cam.width() || img.height() != cam.height()) {
        throw std::invalid_argument("segment_depth: image and camera sizes differ");
    }
    Segmentation seg;
    seg.layers = detect_edge_layers(img, p);
    seg.closed_edges = dilate(seg.layers.edges, p.dilate_close_r);

    Mask free(img.width(), img.height());
    for (std::size_t i = 0; i < free.size(); ++i) {
        free.data()[i] = (!seg.closed_edges.data()[i] && img.data()[i] != 0) ? 1 : 0;
    }
    int n = 0;
    seg.labels = label_components(free, &n);

    std::vector<std::vector<PixelCoord>> groups(static_cast<std::size_t>(n));
    std::vector<int> border_hits(static_cast<std::size_t>(n), 0);
    const int w = img.width();
    const int h = img.height();
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const int l = seg.labels.at(row, col);
            if (l < 0) {
                continue;
            }
            groups[static_cast<std::size_t>(l)].push_back({row, col});
            if (row == 0 || col == 0 || row == h - 1 || col == w - 1) {
                ++border_hits[static_cast<std::size_t>(l)];
            }
        }
    }
    const double border_len = w > 1 && h > 1 ? 2.0 * (w + h) - 4.0 : static_cast<double>(w * h);
    for (std::size_t l = 0; l < groups.size(); ++l) {
        if (static_cast<int>(groups[l].size()) < p.min_pixels) {
            continue;
        }
        if (border_hits[l] > p.max_border_fraction * border_len) {
            continue;
        }
        Superpixel sp = describe(std::move(groups[l]), img, cam);
        if (size_matches(sp, p)) {
            seg.rois.push_back(sp);
        }
        seg.candidates.push_back(std::move(sp));
    }
    return seg;
}

std::vector<Superpixel> extract_rois(const DepthImage& img, const CameraModel& cam,
                                     const SegParams& p) {
    return segment_depth(img, cam, p).rois;
}

Mask superpixel_mask(const Superpixel& sp, int width, int height) {
    Mask m(width, height);
    for (const auto& px : sp.pixels) {
        if (m.contains(px)) {
            m[px] = 1;
        }
    }
    return m;
}

}  // namespace vsg
