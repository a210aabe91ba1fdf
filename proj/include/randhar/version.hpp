#pragma once

namespace randhar {

inline constexpr const char* kArtifactName = "randhar";
inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace randhar
