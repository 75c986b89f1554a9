#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pulsecal/harness/config.hpp"

namespace pulsecal::harness {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestFile = "manifest.json";

struct ArtifactDigest {
  std::string file;  // relative to the output directory
  std::string sha256;

  bool operator==(const ArtifactDigest&) const = default;
};

struct RunManifest {
  std::string command;
  RunConfig config;
  std::vector<ArtifactDigest> artifacts;
  std::string started_utc;
  double elapsed_seconds = 0.0;
};

// Lower-case hex SHA-256 of the file contents; IoError when unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

std::string utc_timestamp();

// Digests for every regular file in dir except the manifest, sorted by name.
std::vector<ArtifactDigest> digest_directory(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace pulsecal::harness
