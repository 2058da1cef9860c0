#include "vsg/refdb_store.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "vsg/config.hpp"

namespace vsg {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff),
                                   static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

std::filesystem::path keypoint_file(const std::filesystem::path& dir, int id) {
    return dir / ("ref_" + std::to_string(id) + ".kp");
}

void write_keypoints(const std::filesystem::path& path, const std::vector<Keypoint>& kps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    put_u32(out, static_cast<std::uint32_t>(kps.size()));
    for (const auto& k : kps) {
        put_f32(out, static_cast<float>(k.px.row));
        put_f32(out, static_cast<float>(k.px.col));
        put_f32(out, k.scale);
        for (float v : k.descriptor) {
            put_f32(out, v);
        }
    }
}

std::vector<Keypoint> read_keypoints(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 4) {
        throw std::runtime_error("truncated keypoint file " + path.string());
    }
    const std::uint32_t count = get_u32(buf.data());
    std::vector<Keypoint> kps;
    if (count == 0) {
        return kps;
    }
    const std::size_t body = buf.size() - 4;
    if (body % (4 * static_cast<std::size_t>(count)) != 0 || body / (4 * count) < 3) {
        throw std::runtime_error("keypoint file size inconsistent with count: " + path.string());
    }
    const std::size_t floats_per = body / (4 * count);
    const std::size_t dim = floats_per - 3;
    kps.reserve(count);
    const unsigned char* p = buf.data() + 4;
    for (std::uint32_t i = 0; i < count; ++i) {
        Keypoint k;
        k.px.row = static_cast<int>(get_f32(p));
        k.px.col = static_cast<int>(get_f32(p + 4));
        k.scale = get_f32(p + 8);
        p += 12;
        k.descriptor.resize(dim);
        for (std::size_t d = 0; d < dim; ++d, p += 4) {
            k.descriptor[d] = get_f32(p);
        }
        kps.push_back(std::move(k));
    }
    return kps;
}

}  // namespace

void save_database(const std::filesystem::path& dir, const ReferenceDatabase& db) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.txt");
    if (!index) {
        throw std::runtime_error("cannot write " + (dir / "index.txt").string());
    }
    index << std::setprecision(17);
    for (const auto& r : db.references()) {
        if (r.object_id.empty() || r.object_id.find_first_of(" \t\n") != std::string::npos) {
            throw std::invalid_argument("save_database: object ids must be non-empty without spaces");
        }
        index << r.id << ' ' << r.object_id << ' ' << r.weight << '\n';
        write_keypoints(keypoint_file(dir, r.id), r.keypoints);
    }
    Config conf;
    store(conf, db.params());
    conf.save(dir / "db.conf");
}

ReferenceDatabase load_database(const std::filesystem::path& dir) {
    DbParams params;
    if (std::filesystem::exists(dir / "db.conf")) {
        apply(Config::load(dir / "db.conf"), params);
    }
    ReferenceDatabase db(params);
    std::ifstream index(dir / "index.txt");
    if (!index) {
        throw std::runtime_error("cannot open " + (dir / "index.txt").string());
    }
    std::string line;
    while (std::getline(index, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::istringstream ls(line);
        Reference r;
        if (!(ls >> r.id >> r.object_id >> r.weight)) {
            throw std::runtime_error("malformed index line: " + line);
        }
        r.keypoints = read_keypoints(keypoint_file(dir, r.id));
        db.restore(std::move(r));
    }
    db.normalize();
    return db;
}

}  // namespace vsg
