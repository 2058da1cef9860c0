#include "vsg/refdb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vsg {

void DbParams::validate() const {
    if (min_weight && !(*min_weight >= 0.0)) {
        throw std::invalid_argument("DbParams: min_weight must be non-negative");
    }
    if (!(max_weight > 0.0) || max_weight > 1.0) {
        throw std::invalid_argument("DbParams: max_weight must lie in (0, 1]");
    }
    if (min_weight && *min_weight > max_weight) {
        throw std::invalid_argument("DbParams: min_weight exceeds max_weight");
    }
    if (!(gain_success > 0.0 && gain_success < 1.0) || !(gain_failure > 0.0 && gain_failure < 1.0)) {
        throw std::invalid_argument("DbParams: gains must lie in (0, 1)");
    }
    if (subset_size < 1) {
        throw std::invalid_argument("DbParams: subset_size must be >= 1");
    }
}

ReferenceDatabase::ReferenceDatabase(DbParams params) : params_(params) { params_.validate(); }

double ReferenceDatabase::min_weight_for(std::size_t n) const {
    if (n == 0) {
        return 0.0;
    }
    if (params_.min_weight) {
        return *params_.min_weight;
    }
    return 0.25 / static_cast<double>(n);
}

double ReferenceDatabase::max_weight_for(std::size_t n) const {
    if (n == 0) {
        return 1.0;
    }
    return std::max(params_.max_weight, 1.0 / static_cast<double>(n));
}

std::vector<double> ReferenceDatabase::weights() const {
    std::vector<double> w;
    w.reserve(refs_.size());
    for (const auto& r : refs_) {
        w.push_back(r.weight);
    }
    return w;
}

int ReferenceDatabase::insert(std::string object_id, std::vector<Keypoint> keypoints) {
    const std::size_t n = refs_.size();
    if (static_cast<double>(n + 1) * min_weight_for(n + 1) > 1.0 + 1e-12) {
        throw std::invalid_argument("ReferenceDatabase::insert: weight bounds infeasible for " +
                                    std::to_string(n + 1) + " references");
    }
    if (!keypoints.empty()) {
        const std::size_t dim = keypoints.front().descriptor.size();
        const auto bad = [dim](const Keypoint& k) { return k.descriptor.size() != dim; };
        if (std::any_of(keypoints.begin(), keypoints.end(), bad)) {
            throw std::invalid_argument("ReferenceDatabase::insert: inconsistent descriptors");
        }
    }
    const double scale = static_cast<double>(n) / static_cast<double>(n + 1);
    for (auto& r : refs_) {
        r.weight *= scale;
    }
    Reference ref;
    ref.id = next_id_++;
    ref.object_id = std::move(object_id);
    ref.keypoints = std::move(keypoints);
    ref.weight = 1.0 / static_cast<double>(n + 1);
    refs_.push_back(std::move(ref));
    normalize();
    return refs_.back().id;
}

void ReferenceDatabase::restore(Reference ref) {
    next_id_ = std::max(next_id_, ref.id + 1);
    refs_.push_back(std::move(ref));
}

void ReferenceDatabase::reset_uniform() {
    if (refs_.empty()) {
        return;
    }
    const double w = 1.0 / static_cast<double>(refs_.size());
    for (auto& r : refs_) {
        r.weight = w;
    }
}

void ReferenceDatabase::set_weights(std::span<const double> weights) {
    if (weights.size() != refs_.size()) {
        throw std::invalid_argument("set_weights: size mismatch");
    }
    const double m = min_weight();
    const double big_m = max_weight();
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= m - 1e-12 && w <= big_m + 1e-12)) {
            throw std::invalid_argument("set_weights: weight outside [m, M]");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("set_weights: weights do not sum to 1");
    }
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        refs_[i].weight = weights[i];
    }
}

std::vector<std::size_t> ReferenceDatabase::sample_subset(std::span<const double> uniforms) const {
    std::vector<std::size_t> picked;
    if (refs_.empty()) {
        return picked;
    }
    std::vector<double> upper(refs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        acc += refs_[i].weight;
        upper[i] = acc;
    }
    for (double u : uniforms) {
        // Interval i is [upper[i-1], upper[i]); rounding slack falls to the last one.
        auto it = std::upper_bound(upper.begin(), upper.end(), u);
        std::size_t idx = it == upper.end() ? refs_.size() - 1
                                            : static_cast<std::size_t>(it - upper.begin());
        picked.push_back(idx);
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    return picked;
}

void ReferenceDatabase::update(std::span<const std::size_t> matched,
                               std::span<const std::size_t> unmatched) {
    const std::size_t n = refs_.size();
    std::vector<int> role(n, 0);
    for (std::size_t i : matched) {
        if (i >= n) {
            throw std::invalid_argument("update: matched index out of range");
        }
        role[i] = 1;
    }
    for (std::size_t i : unmatched) {
        if (i >= n) {
            throw std::invalid_argument("update: unmatched index out of range");
        }
        if (role[i] == 1) {
            throw std::invalid_argument("update: index both matched and unmatched");
        }
        role[i] = -1;
    }
    const double m = min_weight();
    const double big_m = max_weight();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = refs_[i].weight;
        if (role[i] == 1) {
            z[i] = w + params_.gain_success * (big_m - w);
        } else if (role[i] == -1) {
            z[i] = w - params_.gain_failure * (w - m);
        } else {
            z[i] = w;
        }
    }
    redistribute(z);
    for (std::size_t i = 0; i < n; ++i) {
        refs_[i].weight = z[i];
    }
}

void ReferenceDatabase::normalize() {
    const double m = min_weight();
    const double big_m = max_weight();
    std::vector<double> z(refs_.size());
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        z[i] = std::clamp(refs_[i].weight, m, big_m);
    }
    redistribute(z);
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        refs_[i].weight = z[i];
    }
}

void ReferenceDatabase::redistribute(std::vector<double>& z) const {
    if (z.empty()) {
        return;
    }
    const double m = min_weight();
    const double big_m = max_weight();
    const double delta = 1.0 - std::accumulate(z.begin(), z.end(), 0.0);
    if (delta == 0.0) {
        return;
    }
    // Headroom is taken from the corrected weights z, not the pre-update w.
    double total = 0.0;
    std::vector<double> room(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        room[i] = delta > 0.0 ? big_m - z[i] : z[i] - m;
        total += room[i];
    }
    if (total > 0.0) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += room[i] / total * delta;
        }
    } else {
        const double share = delta / static_cast<double>(z.size());
        for (auto& v : z) {
            v += share;
        }
    }
    for (auto& v : z) {
        v = std::clamp(v, m, big_m);  // absorbs last-ulp overshoot only
    }
}

ReferenceDatabase ReferenceDatabase::subset_for(const std::string& object_id) const {
    ReferenceDatabase out(params_);
    for (const auto& r : refs_) {
        if (r.object_id == object_id) {
            out.restore(r);
        }
    }
    out.reset_uniform();
    return out;
}

std::vector<std::string> ReferenceDatabase::object_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : refs_) {
        if (std::find(ids.begin(), ids.end(), r.object_id) == ids.end()) {
            ids.push_back(r.object_id);
        }
    }
    return ids;
}

bool ReferenceDatabase::invariants_hold(double tol) const {
    const std::size_t n = refs_.size();
    if (n == 0) {
        return true;
    }
    const double m = min_weight();
    const double big_m = max_weight();
    if (static_cast<double>(n) * m > 1.0 + tol || static_cast<double>(n) * big_m < 1.0 - tol) {
        return false;
    }
    double sum = 0.0;
    for (const auto& r : refs_) {
        if (r.weight < m - tol || r.weight > big_m + tol) {
            return false;
        }
        sum += r.weight;
    }
    return std::abs(sum - 1.0) <= tol;
}

}  // namespace vsg
