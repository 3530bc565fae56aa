#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "refscore/errors.hpp"

namespace refscore {

// Strict reader for JSON configuration objects. Every accessor records the
// key as consumed; finish() rejects keys nobody asked for. Errors are
// ConfigErrors carrying the dotted field path.
class JsonObjectReader {
 public:
  JsonObjectReader(const nlohmann::json& object, std::string path);

  bool has(const std::string& key) const;
  std::string path_of(const std::string& key) const;

  const nlohmann::json& required(const std::string& key);
  const nlohmann::json* optional(const std::string& key);

  std::string string(const std::string& key);
  std::string string_or(const std::string& key, std::string fallback);
  double number(const std::string& key);
  double number_or(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer_or(const std::string& key, std::int64_t fallback);
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback);
  bool boolean_or(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<std::string> strings_or(const std::string& key, std::vector<std::string> fallback);
  JsonObjectReader object(const std::string& key);

  // Throws if the object held keys that were never read.
  void finish() const;

 private:
  const nlohmann::json& object_;
  std::string path_;
  std::set<std::string> consumed_;
};

}  // namespace refscore
