#include "vsg/posfilter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vsg {

void PosFilterParams::validate() const {
    if (capacity < 1) {
        throw std::invalid_argument("PosFilterParams: capacity must be >= 1");
    }
    if (remove < 0 || remove >= capacity) {
        throw std::invalid_argument("PosFilterParams: need 0 <= remove < capacity");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("PosFilterParams: alpha must be positive");
    }
}

std::vector<double> entry_weights(std::span<const FilterEntry> entries, double now) {
    std::vector<double> b;
    b.reserve(entries.size());
    for (const auto& e : entries) {
        b.push_back(e.q / (now - e.t));
    }
    return b;
}

Vec3 weighted_position(std::span<const FilterEntry> entries, double now) {
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    for (const auto& e : entries) {
        const double b = e.q / (now - e.t);
        num += b * e.h;
        den += b;
    }
    return num / den;
}

namespace {

struct Moments {
    Vec3 position;
    double dispersion;
    double recency;
};

template <typename Range>
Moments moments(const Range& entries, double now) {
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    double recency = 0.0;
    for (const FilterEntry& e : entries) {
        const double age = now - e.t;
        const double b = e.q / age;
        num += b * e.h;
        den += b;
        recency += 1.0 / age;
    }
    const Vec3 pos = num / den;
    double spread = 0.0;
    for (const FilterEntry& e : entries) {
        spread += (pos - e.h).norm() * (e.q / (now - e.t));
    }
    return {pos, spread / den, recency};
}

double quality_of(const std::vector<FilterEntry>& entries, double now, double alpha) {
    const Moments m = moments(entries, now);
    return m.dispersion * m.recency / alpha;
}

// Q of `kept` without the entry at position `skip`.
double leave_one_out(const std::vector<FilterEntry>& all, const std::vector<std::size_t>& kept,
                     std::size_t skip, double now, double alpha) {
    std::vector<FilterEntry> sub;
    sub.reserve(kept.size() - 1);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (k != skip) {
            sub.push_back(all[kept[k]]);
        }
    }
    return quality_of(sub, now, alpha);
}

}  // namespace

double filter_quality(std::span<const FilterEntry> entries, double now, double alpha) {
    const Moments m = moments(entries, now);
    return m.dispersion * m.recency / alpha;
}

PositionFilter::PositionFilter(PosFilterParams params) : params_(params) { params_.validate(); }

void PositionFilter::push(const FilterEntry& entry) {
    if (!entries_.empty() && entry.t < entries_.back().t) {
        throw std::invalid_argument("PositionFilter::push: timestamp older than stored entries");
    }
    if (!(entry.q > 0.0)) {
        throw std::invalid_argument("PositionFilter::push: quality must be positive");
    }
    if (!entry.h.allFinite() || std::abs(entry.a.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("PositionFilter::push: position must be finite, axis unit");
    }
    entries_.push_back(entry);
    while (static_cast<int>(entries_.size()) > params_.capacity) {
        entries_.pop_front();
    }
}

void PositionFilter::check_now(double now) const {
    if (!entries_.empty() && !(now > entries_.back().t)) {
        throw std::invalid_argument("PositionFilter: evaluation time must follow every entry");
    }
}

std::vector<double> PositionFilter::weights(double now) const {
    check_now(now);
    const std::vector<FilterEntry> all(entries_.begin(), entries_.end());
    return entry_weights(all, now);
}

std::optional<PositionEstimate> PositionFilter::estimate(double now) const {
    if (entries_.empty()) {
        return std::nullopt;
    }
    check_now(now);
    const std::vector<FilterEntry> all(entries_.begin(), entries_.end());
    std::vector<std::size_t> kept(all.size());
    std::iota(kept.begin(), kept.end(), 0);

    const int j = params_.remove;
    if (static_cast<int>(all.size()) > j && j > 0) {
        if (params_.removal == RemovalMode::Batch) {
            std::vector<std::pair<double, std::size_t>> ranked;
            for (std::size_t k = 0; k < kept.size(); ++k) {
                ranked.emplace_back(leave_one_out(all, kept, k, now, params_.alpha), k);
            }
            std::sort(ranked.begin(), ranked.end());
            std::vector<bool> drop(all.size(), false);
            for (int r = 0; r < j; ++r) {
                drop[ranked[static_cast<std::size_t>(r)].second] = true;
            }
            std::vector<std::size_t> next;
            for (std::size_t k = 0; k < kept.size(); ++k) {
                if (!drop[k]) {
                    next.push_back(kept[k]);
                }
            }
            kept = std::move(next);
        } else {
            for (int r = 0; r < j; ++r) {
                std::size_t worst = 0;
                double lowest = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < kept.size(); ++k) {
                    const double q = leave_one_out(all, kept, k, now, params_.alpha);
                    if (q < lowest) {
                        lowest = q;
                        worst = k;
                    }
                }
                kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(worst));
            }
        }
    }

    std::vector<FilterEntry> sub;
    sub.reserve(kept.size());
    for (std::size_t k : kept) {
        sub.push_back(all[k]);
    }
    const Moments m = moments(sub, now);

    PositionEstimate est;
    est.position = m.position;
    est.dispersion = m.dispersion;
    est.recency = m.recency;
    est.quality = m.dispersion * m.recency / params_.alpha;
    est.kept = kept;

    // Axes are direction-less: align each with the running mean before adding.
    Vec3 acc = Vec3::Zero();
    for (const auto& e : sub) {
        const double b = e.q / (now - e.t);
        const Vec3 a = acc.dot(e.a) < 0.0 ? Vec3(-e.a) : e.a;
        acc += b * a;
    }
    est.axis = acc.norm() > 0.0 ? Vec3(acc.normalized()) : sub.front().a;
    return est;
}

bool PositionFilter::converged(double now) const {
    if (static_cast<int>(entries_.size()) <= params_.remove) {
        return false;
    }
    const auto est = estimate(now);
    if (!est) {
        return false;
    }
    switch (params_.rule) {
        case ConvergenceRule::Decomposed:
            return est->recency >= params_.alpha && est->dispersion <= params_.max_dispersion;
        case ConvergenceRule::QualityAbove:
            return est->quality >= params_.quality_threshold;
        case ConvergenceRule::QualityBelow:
            return est->quality <= params_.quality_threshold;
    }
    return false;
}

}  // namespace vsg
