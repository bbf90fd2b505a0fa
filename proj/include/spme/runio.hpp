// Run-directory persistence: manifest.json written before any estimate file,
// then CSV tables with fixed float formatting so reruns are byte-identical.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spme {

// Fixed shortest-roundtrip formatting ("%.17g") used for every CSV number.
std::string format_double(double v);

std::uint64_t fnv1a_hash(const std::string& bytes);

class RunDir {
 public:
  // Creates the directory (parents included) and records the manifest data;
  // nothing is written until write_manifest.
  explicit RunDir(const std::string& dir);

  const std::string& dir() const { return dir_; }

  // files: the artifact names the run will emit (manifest goes first, so the
  // list is declared up front). extra: preformatted JSON values by key.
  void write_manifest(const std::string& command, const std::string& config_bytes,
                      std::uint64_t seed, const std::vector<std::string>& files,
                      const std::vector<std::pair<std::string, std::string>>& extra = {});

  // Refuses to write data files before the manifest exists.
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

 private:
  std::string dir_;
  bool manifest_written_ = false;
  std::vector<std::string> files_;
};

// Output root: --out flag if given, else $SPME_LAB_OUT, else "./runs".
std::string resolve_output_root(const std::string& flag_value);

}  // namespace spme
