#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vsg/depth_seg.hpp"
#include "vsg/gripper_track.hpp"
#include "vsg/matching.hpp"
#include "vsg/posfilter.hpp"
#include "vsg/refdb.hpp"

namespace vsg {

/// Flat key=value settings. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
class Config {
public:
    /// Throws std::runtime_error on unreadable files or lines without '='.
    static Config load(const std::filesystem::path& path);
    static Config parse(const std::string& text);

    void save(const std::filesystem::path& path) const;
    std::string to_string() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::vector<std::string> keys() const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, int value);
    void set(const std::string& key, bool value);

    // Typed reads leave `out` untouched when the key is absent and throw
    // std::invalid_argument when the value does not parse.
    void read(const std::string& key, double& out) const;
    void read(const std::string& key, int& out) const;
    void read(const std::string& key, bool& out) const;
    void read(const std::string& key, std::string& out) const;
    void read(const std::string& key, std::uint64_t& out) const;

private:
    std::map<std::string, std::string> values_;
};

void apply(const Config& c, SegParams& p);
void apply(const Config& c, MatchParams& p);
void apply(const Config& c, DbParams& p);
void apply(const Config& c, PosFilterParams& p);
void apply(const Config& c, TrackerParams& p);
void apply(const Config& c, GripperGeometry& g);

void store(Config& c, const SegParams& p);
void store(Config& c, const MatchParams& p);
void store(Config& c, const DbParams& p);
void store(Config& c, const PosFilterParams& p);
void store(Config& c, const TrackerParams& p);
void store(Config& c, const GripperGeometry& g);

}  // namespace vsg
