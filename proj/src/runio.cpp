#include "spme/runio.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace spme {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

RunDir::RunDir(const std::string& dir) : dir_(dir) {
  std::filesystem::create_directories(dir_);
}

void RunDir::write_manifest(const std::string& command, const std::string& config_bytes,
                            std::uint64_t seed, const std::vector<std::string>& files,
                            const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::ordered_json j;
  j["artifact_version"] = 1;
  j["command"] = command;
  j["config"] = config_bytes;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(config_bytes)));
  j["config_hash_fnv1a"] = hash;
  j["seed"] = seed;
  j["files"] = files;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["timestamp"] = stamp;
  for (const auto& [key, value] : extra) j[key] = nlohmann::json::parse(value);
  std::ofstream out(std::filesystem::path(dir_) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_);
  out << j.dump(2) << "\n";
  manifest_written_ = true;
  files_ = files;
}

void RunDir::write_csv(const std::string& name, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  if (!manifest_written_)
    throw std::logic_error("run directory: manifest must be written first");
  std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + name + " in " + dir_);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
}

std::string resolve_output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SPME_LAB_OUT"); env && *env) return env;
  return "runs";
}

}  // namespace spme
