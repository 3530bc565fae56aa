#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace refscore::app {

std::string sha256_hex(const std::string& bytes);

// In-memory set of report files, kept in emission order.
class Bundle {
 public:
  void add(std::string name, std::string contents);
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const std::string* find(const std::string& name) const;

  // Appends manifest.json listing every file with its SHA-256.
  void seal(nlohmann::ordered_json manifest_head);

  void write_to(const std::filesystem::path& dir) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace refscore::app
