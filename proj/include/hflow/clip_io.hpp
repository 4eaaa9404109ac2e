#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hflow/clip.hpp"

namespace hflow {

// HFSF binary container, little-endian: magic "HFSF", version u32, chunk
// count u32, then chunks of (tag, frame u32, dtype u8, ndim u8, dims,
// payload).  Serialization is deterministic; equal clips produce equal
// bytes.

size_t write_clip(const SceneClip& clip, std::ostream& out);
size_t write_clip_file(const SceneClip& clip, const std::string& path);

// Unknown chunk tags are skipped and reported through `warnings`.
SceneClip read_clip(std::istream& in, std::vector<std::string>* warnings = nullptr);
SceneClip read_clip_file(const std::string& path, std::vector<std::string>* warnings = nullptr);

}  // namespace hflow
