#pragma once

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "vsg/geometry.hpp"

namespace vsg {

struct FilterEntry {
    Vec3 h = Vec3::Zero();  ///< detected object position, meters
    double q = 1.0;         ///< detection quality (inlier count)
    double t = 0.0;         ///< timestamp, seconds
    Vec3 a = Vec3::UnitZ(); ///< detected object axis, unit
};

enum class RemovalMode { Batch, Greedy };

/// How `converged` reads the filter quality.
enum class ConvergenceRule {
    /// recency mass >= alpha and dispersion <= max_dispersion
    Decomposed,
    /// Q(F') >= quality_threshold
    QualityAbove,
    /// Q(F') <= quality_threshold
    QualityBelow,
};

struct PosFilterParams {
    int capacity = 10;  ///< l
    int remove = 2;     ///< j
    double alpha = 10.0;
    RemovalMode removal = RemovalMode::Batch;
    ConvergenceRule rule = ConvergenceRule::Decomposed;
    double max_dispersion = 0.02;
    double quality_threshold = 0.0;

    void validate() const;
};

struct PositionEstimate {
    Vec3 position = Vec3::Zero();
    double quality = 0.0;      ///< dispersion * recency / alpha
    double dispersion = 0.0;   ///< weighted mean distance to the position, meters
    double recency = 0.0;      ///< sum of 1 / (now - t_i)
    Vec3 axis = Vec3::UnitZ();
    std::vector<std::size_t> kept;  ///< indices (oldest first) of the entries used
};

/// Recency weights b_i = q_i / (now - t_i).
std::vector<double> entry_weights(std::span<const FilterEntry> entries, double now);

/// Weighted mean position of `entries` (no removal).
Vec3 weighted_position(std::span<const FilterEntry> entries, double now);

/// Q of a set of entries (no removal).
double filter_quality(std::span<const FilterEntry> entries, double now, double alpha);

/// Sliding window of detections with leave-one-out outlier removal.
/// Single writer; `estimate` works on the current contents.
class PositionFilter {
public:
    explicit PositionFilter(PosFilterParams params = {});

    const PosFilterParams& params() const { return params_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::vector<FilterEntry> entries() const { return {entries_.begin(), entries_.end()}; }

    /// Appends, evicting the oldest entry beyond capacity. Throws
    /// std::invalid_argument on a timestamp older than a stored one, a
    /// non-positive quality or a non-unit axis.
    void push(const FilterEntry& entry);

    void clear() { entries_.clear(); }

    /// Throws std::invalid_argument unless now > every stored timestamp.
    std::vector<double> weights(double now) const;

    /// Empty when the filter holds no entries. Throws std::invalid_argument
    /// unless now > every stored timestamp.
    std::optional<PositionEstimate> estimate(double now) const;

    bool converged(double now) const;

private:
    void check_now(double now) const;

    PosFilterParams params_;
    std::deque<FilterEntry> entries_;
};

}  // namespace vsg
