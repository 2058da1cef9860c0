#pragma once

#include <filesystem>

#include "vsg/refdb.hpp"

namespace vsg {

/// Directory layout:
///   index.txt        one line per reference: `id object_id weight`
///   db.conf          key=value database parameters
///   ref_<id>.kp      little-endian uint32 count, then per keypoint
///                    float32 row, col, scale and D float32 descriptor values
void save_database(const std::filesystem::path& dir, const ReferenceDatabase& db);

/// Descriptor length is recovered from each keypoint file's size. Weights are
/// renormalized after loading.
ReferenceDatabase load_database(const std::filesystem::path& dir);

}  // namespace vsg
