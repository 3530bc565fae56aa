#include "bundle.hpp"

#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "refscore/errors.hpp"

namespace refscore::app {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void Bundle::add(std::string name, std::string contents) {
  for (auto& [existing, body] : files_)
    if (existing == name) {
      body = std::move(contents);
      return;
    }
  files_.emplace_back(std::move(name), std::move(contents));
}

const std::string* Bundle::find(const std::string& name) const {
  for (const auto& [existing, body] : files_)
    if (existing == name) return &body;
  return nullptr;
}

void Bundle::seal(nlohmann::ordered_json manifest_head) {
  auto artifacts = nlohmann::ordered_json::array();
  for (const auto& [name, body] : files_)
    artifacts.push_back({{"file", name}, {"bytes", body.size()}, {"sha256", sha256_hex(body)}});
  manifest_head["artifacts"] = std::move(artifacts);
  add("manifest.json", manifest_head.dump(2) + "\n");
}

void Bundle::write_to(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  for (const auto& [name, body] : files_) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  }
}

}  // namespace refscore::app
