#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedhpn {

// Exit-code-bearing error categories. The CLI maps them to process exit
// codes; library code throws them directly.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 2;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 3;
};

struct MissingArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 4;
};

// FNV-1a, 64 bit. Used for config hashes, seed derivation and purity checks.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Canonical float formatting for CSV output: 17 significant digits,
// enough to round-trip any double exactly.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fedhpn
