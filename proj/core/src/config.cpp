#include "vsg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vsg {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: bad value for " + key + ": '" + v + "'");
    }
    return out;
}

std::string format(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: line " + std::to_string(lineno) + " has no '='");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) {
            throw std::runtime_error("config: line " + std::to_string(lineno) + " has an empty key");
        }
        c.values_[key] = trim(t.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("config: cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string Config::to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k + "=" + v + "\n";
    }
    return out;
}

void Config::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("config: cannot write " + path.string());
    }
    f << to_string();
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    for (const auto& kv : values_) {
        out.push_back(kv.first);
    }
    return out;
}

void Config::set(const std::string& key, double value) { values_[key] = format(value); }
void Config::set(const std::string& key, int value) { values_[key] = std::to_string(value); }
void Config::set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }

void Config::read(const std::string& key, double& out) const {
    if (auto it = values_.find(key); it != values_.end()) {
        out = parse_number<double>(key, it->second);
    }
}

void Config::read(const std::string& key, int& out) const {
    if (auto it = values_.find(key); it != values_.end()) {
        out = parse_number<int>(key, it->second);
    }
}

void Config::read(const std::string& key, std::uint64_t& out) const {
    if (auto it = values_.find(key); it != values_.end()) {
        out = parse_number<std::uint64_t>(key, it->second);
    }
}

void Config::read(const std::string& key, bool& out) const {
    if (auto it = values_.find(key); it != values_.end()) {
        if (it->second == "true" || it->second == "1") {
            out = true;
        } else if (it->second == "false" || it->second == "0") {
            out = false;
        } else {
            throw std::invalid_argument("config: bad boolean for " + key);
        }
    }
}

void Config::read(const std::string& key, std::string& out) const {
    if (auto it = values_.find(key); it != values_.end()) {
        out = it->second;
    }
}

void apply(const Config& c, SegParams& p) {
    c.read("seg.k1", p.k1);
    c.read("seg.k2", p.k2);
    c.read("seg.t1", p.t1);
    c.read("seg.t2", p.t2);
    c.read("seg.dilate_mask_r", p.dilate_mask_r);
    c.read("seg.dilate_close_r", p.dilate_close_r);
    c.read("seg.erode_r", p.erode_r);
    c.read("seg.min_pixels", p.min_pixels);
    c.read("seg.expected_width_m", p.expected_width_m);
    c.read("seg.expected_height_m", p.expected_height_m);
    c.read("seg.size_tol", p.size_tol);
    c.read("seg.max_border_fraction", p.max_border_fraction);
    p.validate();
}

void store(Config& c, const SegParams& p) {
    c.set("seg.k1", p.k1);
    c.set("seg.k2", p.k2);
    c.set("seg.t1", p.t1);
    c.set("seg.t2", p.t2);
    c.set("seg.dilate_mask_r", p.dilate_mask_r);
    c.set("seg.dilate_close_r", p.dilate_close_r);
    c.set("seg.erode_r", p.erode_r);
    c.set("seg.min_pixels", p.min_pixels);
    c.set("seg.expected_width_m", p.expected_width_m);
    c.set("seg.expected_height_m", p.expected_height_m);
    c.set("seg.size_tol", p.size_tol);
    c.set("seg.max_border_fraction", p.max_border_fraction);
}

void apply(const Config& c, MatchParams& p) {
    c.read("match.ratio", p.ratio);
    c.read("match.ransac_iters", p.ransac_iters);
    c.read("match.inlier_px", p.inlier_px);
    c.read("match.match_min", p.match_min);
    c.read("match.seed", p.seed);
    c.read("match.confidence", p.confidence);
}

void store(Config& c, const MatchParams& p) {
    c.set("match.ratio", p.ratio);
    c.set("match.ransac_iters", p.ransac_iters);
    c.set("match.inlier_px", p.inlier_px);
    c.set("match.match_min", p.match_min);
    c.set("match.seed", std::to_string(p.seed));
    c.set("match.confidence", p.confidence);
}

void apply(const Config& c, DbParams& p) {
    std::string m;
    c.read("db.min_weight", m);
    if (m == "auto") {
        p.min_weight.reset();
    } else if (!m.empty()) {
        double v = 0.0;
        c.read("db.min_weight", v);
        p.min_weight = v;
    }
    c.read("db.max_weight", p.max_weight);
    c.read("db.gain_success", p.gain_success);
    c.read("db.gain_failure", p.gain_failure);
    c.read("db.subset_size", p.subset_size);
    p.validate();
}

void store(Config& c, const DbParams& p) {
    if (p.min_weight) {
        c.set("db.min_weight", *p.min_weight);
    } else {
        c.set("db.min_weight", std::string("auto"));
    }
    c.set("db.max_weight", p.max_weight);
    c.set("db.gain_success", p.gain_success);
    c.set("db.gain_failure", p.gain_failure);
    c.set("db.subset_size", p.subset_size);
}

void apply(const Config& c, PosFilterParams& p) {
    c.read("filter.capacity", p.capacity);
    c.read("filter.remove", p.remove);
    c.read("filter.alpha", p.alpha);
    c.read("filter.max_dispersion", p.max_dispersion);
    c.read("filter.quality_threshold", p.quality_threshold);
    std::string s;
    c.read("filter.removal", s);
    if (s == "batch") {
        p.removal = RemovalMode::Batch;
    } else if (s == "greedy") {
        p.removal = RemovalMode::Greedy;
    } else if (!s.empty()) {
        throw std::invalid_argument("config: filter.removal must be batch or greedy");
    }
    s.clear();
    c.read("filter.rule", s);
    if (s == "decomposed") {
        p.rule = ConvergenceRule::Decomposed;
    } else if (s == "quality_above") {
        p.rule = ConvergenceRule::QualityAbove;
    } else if (s == "quality_below") {
        p.rule = ConvergenceRule::QualityBelow;
    } else if (!s.empty()) {
        throw std::invalid_argument("config: unknown filter.rule " + s);
    }
    p.validate();
}

void store(Config& c, const PosFilterParams& p) {
    c.set("filter.capacity", p.capacity);
    c.set("filter.remove", p.remove);
    c.set("filter.alpha", p.alpha);
    c.set("filter.max_dispersion", p.max_dispersion);
    c.set("filter.quality_threshold", p.quality_threshold);
    c.set("filter.removal", std::string(p.removal == RemovalMode::Batch ? "batch" : "greedy"));
    const char* rule = p.rule == ConvergenceRule::Decomposed     ? "decomposed"
                       : p.rule == ConvergenceRule::QualityAbove ? "quality_above"
                                                                 : "quality_below";
    c.set("filter.rule", std::string(rule));
}

void apply(const Config& c, TrackerParams& p) {
    c.read("tracker.process_noise", p.process_noise);
    c.read("tracker.measurement_sigma", p.measurement_sigma);
    c.read("tracker.failure_inflation", p.failure_inflation);
    c.read("tracker.uncertainty_threshold", p.uncertainty_threshold);
    c.read("tracker.black_threshold", p.black_threshold);
    c.read("tracker.min_pixels", p.min_pixels);
    c.read("tracker.finger_tolerance", p.finger_tolerance);
    c.read("tracker.gain", p.gain);
    p.validate();
}

void store(Config& c, const TrackerParams& p) {
    c.set("tracker.process_noise", p.process_noise);
    c.set("tracker.measurement_sigma", p.measurement_sigma);
    c.set("tracker.failure_inflation", p.failure_inflation);
    c.set("tracker.uncertainty_threshold", p.uncertainty_threshold);
    c.set("tracker.black_threshold", p.black_threshold);
    c.set("tracker.min_pixels", p.min_pixels);
    c.set("tracker.finger_tolerance", p.finger_tolerance);
    c.set("tracker.gain", p.gain);
}

void apply(const Config& c, GripperGeometry& g) {
    c.read("gripper.g_w", g.g_w);
    c.read("gripper.f_w", g.f_w);
    c.read("gripper.f_t", g.f_t);
    c.read("gripper.f_l", g.f_l);
    c.read("gripper.eps", g.eps);
    g.validate();
}

void store(Config& c, const GripperGeometry& g) {
    c.set("gripper.g_w", g.g_w);
    c.set("gripper.f_w", g.f_w);
    c.set("gripper.f_t", g.f_t);
    c.set("gripper.f_l", g.f_l);
    c.set("gripper.eps", g.eps);
}

}  // namespace vsg
