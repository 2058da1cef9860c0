#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vsg/matching.hpp"

namespace vsg {

struct Reference {
    int id = 0;
    std::string object_id;
    std::vector<Keypoint> keypoints;
    double weight = 0.0;
};

/// Weight bounds and learning gains. An unset `min_weight` follows n as
/// 0.25 / n; the upper bound is raised to 1 / n while the database is too small
/// to reach it.
struct DbParams {
    std::optional<double> min_weight;
    double max_weight = 0.25;
    double gain_success = 0.3;
    double gain_failure = 0.04;
    int subset_size = 5;

    void validate() const;
};

/// Weighted reference store. Weights always sum to 1 and stay within
/// [m, M]. Single writer: sample/update must be serialized by the caller.
class ReferenceDatabase {
public:
    explicit ReferenceDatabase(DbParams params = {});

    const DbParams& params() const { return params_; }
    std::size_t size() const { return refs_.size(); }
    bool empty() const { return refs_.empty(); }

    const std::vector<Reference>& references() const { return refs_; }
    const Reference& at(std::size_t index) const { return refs_.at(index); }
    std::vector<double> weights() const;

    /// Effective bounds for the current size.
    double min_weight() const { return min_weight_for(refs_.size()); }
    double max_weight() const { return max_weight_for(refs_.size()); }

    /// Adds a reference with weight 1/(n+1), rescaling the others by n/(n+1).
    /// Throws std::invalid_argument when (n+1)·m > 1.
    int insert(std::string object_id, std::vector<Keypoint> keypoints);

    /// Restores a stored reference verbatim; call normalize() after the last one.
    void restore(Reference ref);

    void reset_uniform();

    /// Replaces all weights; throws unless they sum to 1 within 1e-9 and respect the bounds.
    void set_weights(std::span<const double> weights);

    /// Maps each uniform through the cumulative weight intervals; duplicates
    /// collapse, so the result holds at most `uniforms.size()` distinct
    /// indices in ascending order.
    std::vector<std::size_t> sample_subset(std::span<const double> uniforms) const;

    template <typename Rng>
    std::vector<std::size_t> sample_subset(std::size_t count, Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> draws(count);
        for (auto& d : draws) {
            d = u(rng);
        }
        return sample_subset(draws);
    }

    /// Success gain for `matched`, failure gain for `unmatched`, then the
    /// headroom-proportional renormalization. Throws std::invalid_argument on
    /// overlapping or out-of-range indices.
    void update(std::span<const std::size_t> matched, std::span<const std::size_t> unmatched);

    /// Clamps into the bounds and redistributes the residual by headroom.
    void normalize();

    /// Copy holding only one object's references, weights uniform.
    ReferenceDatabase subset_for(const std::string& object_id) const;

    std::vector<std::string> object_ids() const;

    /// True when n·m <= 1 <= n·M and all weights respect the invariants within `tol`.
    bool invariants_hold(double tol = 1e-9) const;

private:
    double min_weight_for(std::size_t n) const;
    double max_weight_for(std::size_t n) const;
    void redistribute(std::vector<double>& z) const;

    DbParams params_;
    std::vector<Reference> refs_;
    int next_id_ = 0;
};

}  // namespace vsg
