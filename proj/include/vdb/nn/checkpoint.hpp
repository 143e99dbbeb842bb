#pragma once

#include <filesystem>
#include <iosfwd>

#include "vdb/nn/tensor.hpp"

namespace vdb {

/// Text checkpoint, format version 1:
///
///     vdb-checkpoint 1
///     tensors <count>
///     tensor <name> <rows> <cols>
///     <rows lines of cols values, %.17g>
///     ...
///
/// Names must not contain whitespace. Values round-trip exactly.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(std::ostream& os, const ConstParamList& params);
void save_checkpoint(const std::filesystem::path& path, const ConstParamList& params);

/// Loads into existing tensors, matched by position. Throws DimensionError if
/// a name or shape disagrees and std::runtime_error on malformed input.
void load_checkpoint(std::istream& is, const ParamList& params);
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);

}  // namespace vdb
