#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "vsg/geometry.hpp"

namespace vsg {

/// Row-major raster.
template <typename T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked(width) * checked(height)), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int row, int col) const {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }
    bool contains(const PixelCoord& p) const { return contains(p.row, p.col); }

    T& at(int row, int col) { return data_[index(row, col)]; }
    const T& at(int row, int col) const { return data_[index(row, col)]; }
    T& operator[](const PixelCoord& p) { return at(p.row, p.col); }
    const T& operator[](const PixelCoord& p) const { return at(p.row, p.col); }

    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Image<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

private:
    static long checked(int v) {
        if (v < 0) {
            throw std::invalid_argument("Image: negative dimension");
        }
        return v;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Depth in integer millimeters; 0 means no return.
using DepthImage = Image<std::uint16_t>;
using ColorImage = Image<Rgb>;
/// Binary mask, 0 or 1.
using Mask = Image<std::uint8_t>;
/// Real-valued grid; NaN marks invalid cells.
using Grid = Image<double>;

inline constexpr std::uint16_t kMaxDepthMm = 10000;

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples).
DepthImage read_depth_pgm(const std::filesystem::path& path);
void write_depth_pgm(const std::filesystem::path& path, const DepthImage& img);

/// 8-bit binary PGM; mask cells are written as 0/255.
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_pgm(const std::filesystem::path& path);

/// Binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const ColorImage& img);

}  // namespace vsg
