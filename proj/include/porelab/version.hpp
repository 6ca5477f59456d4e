#pragma once

namespace porelab {

inline constexpr const char* kVersion = "0.1.0";

#if defined(__clang__)
inline constexpr const char* kCompiler = "clang " __clang_version__;
#elif defined(__GNUC__)
#define PORELAB_STR2(x) #x
#define PORELAB_STR(x) PORELAB_STR2(x)
inline constexpr const char* kCompiler =
    "gcc " PORELAB_STR(__GNUC__) "." PORELAB_STR(__GNUC_MINOR__);
#undef PORELAB_STR
#undef PORELAB_STR2
#else
inline constexpr const char* kCompiler = "unknown";
#endif

}  // namespace porelab
