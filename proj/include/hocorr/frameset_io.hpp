#pragma once

#include <string>

#include "hocorr/simulator.hpp"

namespace hocorr {

// Flat binary format: 64-byte header (magic "HBTF", u32 version, u64 N,
// u64 M, u64 seed, zero padding), then N x M little-endian float64 in
// frame-major order. A human-readable key=value sidecar at <path>.meta
// carries the source/array/noise metadata.
void write_frameset(const std::string& path, const FrameSet& frames);
FrameSet read_frameset(const std::string& path);

std::string frameset_meta_path(const std::string& path);

}  // namespace hocorr
