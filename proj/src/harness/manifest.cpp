#include "srlfd/harness/manifest.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include "json.hpp"

#include "srlfd/errors.hpp"

namespace srlfd::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_.get(), p, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for hashing");
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  return h.hex();
}

std::string sha256_hex(const std::string& data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

Manifest Manifest::load(const std::string& workdir) {
  Manifest m;
  const fs::path p = fs::path(workdir) / kManifestName;
  if (!fs::exists(p)) return m;
  std::ifstream f(p);
  if (!f) throw IoError("cannot open " + p.string());
  json j;
  try {
    f >> j;
    for (const auto& [rel, rec] : j.at("artifacts").items())
      m.artifacts_[rel] = {rec.at("sha256").get<std::string>(), rec.at("fingerprint").get<std::string>()};
    for (const auto& [id, rec] : j.at("cells").items())
      m.cells_[id] = {rec.at("status").get<std::string>(), rec.value("error", std::string())};
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  return m;
}

void Manifest::save(const std::string& workdir) const {
  json j;
  j["version"] = 1;
  j["artifacts"] = json::object();
  j["cells"] = json::object();
  for (const auto& [rel, rec] : artifacts_) j["artifacts"][rel] = {{"sha256", rec.sha256}, {"fingerprint", rec.fingerprint}};
  for (const auto& [id, rec] : cells_) {
    j["cells"][id] = {{"status", rec.status}};
    if (!rec.error.empty()) j["cells"][id]["error"] = rec.error;
  }
  const fs::path p = fs::path(workdir) / kManifestName;
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

bool Manifest::fresh(const std::string& workdir, const std::string& rel, const std::string& fingerprint) const {
  auto it = artifacts_.find(rel);
  if (it == artifacts_.end() || it->second.fingerprint != fingerprint) return false;
  const fs::path p = fs::path(workdir) / rel;
  return fs::exists(p) && sha256_file(p.string()) == it->second.sha256;
}

void Manifest::record(const std::string& workdir, const std::string& rel, const std::string& fingerprint) {
  artifacts_[rel] = {sha256_file((fs::path(workdir) / rel).string()), fingerprint};
}

}  // namespace srlfd::harness
