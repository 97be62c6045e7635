#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace magmap {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit, hex-encoded. Content fingerprint for provenance records.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hash_bytes(const std::string& bytes);
std::string hash_file(const std::string& path);

// Write-temp-then-rename so partially written outputs never appear under
// the target name.
void atomic_write_file(const std::string& path, const std::string& content);

// "# key: value" comment lines placed at the top of CSV outputs.
std::vector<std::string> provenance_lines(
    std::uint64_t seed, const std::vector<std::string>& input_paths);

}  // namespace magmap
