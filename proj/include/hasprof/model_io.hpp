#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "hasprof/model.hpp"

namespace hasprof {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Little-endian binary encoding; the layout is described in docs/model_format.md.
void save_model(std::ostream& out, const Model& model);
void save_model(const std::filesystem::path& path, const Model& model);

/// Throws FormatError on a bad magic, truncation or inconsistent content and
/// VersionError on an unknown format version.
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace hasprof
