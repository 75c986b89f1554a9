#include "pulsecal/harness/manifest.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "pulsecal/error.hpp"
#include "pulsecal/harness/csv_io.hpp"

namespace pulsecal::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct DigestContext {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), EVP_MD_CTX_free};

  DigestContext() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw IoError("sha256 initialisation failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) {
      throw IoError("sha256 update failed");
    }
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
      throw IoError("sha256 finalisation failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += fmt::format("{:02x}", digest[i]);
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  DigestContext digest;
  digest.update(bytes.data(), bytes.size());
  return digest.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot read '{}'", path.string()));
  }
  DigestContext digest;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    digest.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return digest.hex();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::vector<ArtifactDigest> digest_directory(const fs::path& dir) {
  std::vector<ArtifactDigest> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifestFile) {
      continue;
    }
    out.push_back({rel, sha256_file(entry.path())});
  }
  std::sort(out.begin(), out.end(),
            [](const ArtifactDigest& a, const ArtifactDigest& b) { return a.file < b.file; });
  return out;
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  ordered_json doc;
  doc["tool"] = "pulsecal";
  doc["version"] = kToolVersion;
  doc["command"] = manifest.command;
  doc["started_utc"] = manifest.started_utc;
  doc["elapsed_seconds"] = manifest.elapsed_seconds;
  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : to_key_values(manifest.config)) {
    config[key] = value;
  }
  doc["config"] = config;
  ordered_json artifacts = ordered_json::object();
  for (const auto& a : manifest.artifacts) {
    artifacts[a.file] = a.sha256;
  }
  doc["artifacts"] = artifacts;
  write_text(dir / kManifestFile, doc.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot read '{}'", path.string()));
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  RunManifest manifest;
  try {
    manifest.command = doc.at("command").get<std::string>();
    manifest.started_utc = doc.at("started_utc").get<std::string>();
    manifest.elapsed_seconds = doc.at("elapsed_seconds").get<double>();
    for (const auto& [key, value] : doc.at("config").items()) {
      apply_key(manifest.config, key, value.get<std::string>());
    }
    for (const auto& [file, digest] : doc.at("artifacts").items()) {
      manifest.artifacts.push_back({file, digest.get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("'{}' is malformed: {}", path.string(), e.what()));
  }
  return manifest;
}

}  // namespace pulsecal::harness
