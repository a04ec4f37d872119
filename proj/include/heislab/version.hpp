#pragma once

namespace heislab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestSchema = 1;

}  // namespace heislab
