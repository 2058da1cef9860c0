#include <cctype>
#include <fstream>
#include <string>

#include "vsg/image.hpp"

namespace vsg {
namespace {

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

void skip_space_and_comments(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
    PnmHeader h;
    in >> h.magic;
    skip_space_and_comments(in);
    in >> h.width;
    skip_space_and_comments(in);
    in >> h.height;
    skip_space_and_comments(in);
    in >> h.maxval;
    if (!in || h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
        throw std::runtime_error("malformed PNM header: " + path.string());
    }
    in.get();  // single whitespace before the raster
    return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

}  // namespace

DepthImage read_depth_pgm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const PnmHeader h = read_header(in, path);
    if (h.magic != "P5") {
        throw std::runtime_error("not a binary PGM: " + path.string());
    }
    DepthImage img(h.width, h.height);
    if (h.maxval > 255) {
        std::vector<unsigned char> buf(img.size() * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) {
            throw std::runtime_error("truncated PGM raster: " + path.string());
        }
        for (std::size_t i = 0; i < img.size(); ++i) {
            img.data()[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
        }
    } else {
        std::vector<unsigned char> buf(img.size());
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) {
            throw std::runtime_error("truncated PGM raster: " + path.string());
        }
        for (std::size_t i = 0; i < img.size(); ++i) {
            img.data()[i] = buf[i];
        }
    }
    return img;
}

void write_depth_pgm(const std::filesystem::path& path, const DepthImage& img) {
    auto out = open_out(path);
    out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
    std::vector<unsigned char> buf(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        buf[2 * i] = static_cast<unsigned char>(img.data()[i] >> 8);
        buf[2 * i + 1] = static_cast<unsigned char>(img.data()[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
    auto out = open_out(path);
    out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    std::vector<unsigned char> buf(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        buf[i] = mask.data()[i] ? 255 : 0;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Mask read_mask_pgm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const PnmHeader h = read_header(in, path);
    if (h.magic != "P5" || h.maxval > 255) {
        throw std::runtime_error("not an 8-bit binary PGM: " + path.string());
    }
    Mask mask(h.width, h.height);
    std::vector<unsigned char> buf(mask.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) {
        throw std::runtime_error("truncated PGM raster: " + path.string());
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask.data()[i] = buf[i] ? 1 : 0;
    }
    return mask;
}

void write_ppm(const std::filesystem::path& path, const ColorImage& img) {
    auto out = open_out(path);
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (const Rgb& p : img.data()) {
        const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(px, 3);
    }
}

}  // namespace vsg
