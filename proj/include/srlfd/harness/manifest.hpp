#pragma once

#include <map>
#include <optional>
#include <string>

namespace srlfd::harness {

// Lowercase hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& data);

struct ArtifactRecord {
  std::string sha256;
  // Digest of everything that determined the artifact's content.
  std::string fingerprint;
};

struct CellRecord {
  std::string status;  // "done" or "failed"
  std::string error;
};

// JSON index of a work directory. Paths are relative to the workdir.
class Manifest {
 public:
  static Manifest load(const std::string& workdir);  // empty when absent
  void save(const std::string& workdir) const;        // atomic replace

  // True when the file exists, was recorded with `fingerprint`, and its
  // current bytes still hash to the recorded digest.
  bool fresh(const std::string& workdir, const std::string& rel, const std::string& fingerprint) const;
  void record(const std::string& workdir, const std::string& rel, const std::string& fingerprint);

  const std::map<std::string, ArtifactRecord>& artifacts() const { return artifacts_; }
  const std::map<std::string, CellRecord>& cells() const { return cells_; }
  void set_cell(const std::string& id, CellRecord rec) { cells_[id] = std::move(rec); }

 private:
  std::map<std::string, ArtifactRecord> artifacts_;
  std::map<std::string, CellRecord> cells_;
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace srlfd::harness
