#include "refscore/json_reader.hpp"

namespace refscore {

JsonObjectReader::JsonObjectReader(const nlohmann::json& object, std::string path)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object");
}

bool JsonObjectReader::has(const std::string& key) const { return object_.contains(key); }

std::string JsonObjectReader::path_of(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const nlohmann::json& JsonObjectReader::required(const std::string& key) {
  consumed_.insert(key);
  auto it = object_.find(key);
  if (it == object_.end()) throw ConfigError(path_of(key) + ": required field missing");
  return *it;
}

const nlohmann::json* JsonObjectReader::optional(const std::string& key) {
  consumed_.insert(key);
  auto it = object_.find(key);
  return it == object_.end() ? nullptr : &*it;
}

std::string JsonObjectReader::string(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_string()) throw ConfigError(path_of(key) + ": expected a string");
  return v.get<std::string>();
}

std::string JsonObjectReader::string_or(const std::string& key, std::string fallback) {
  return has(key) ? string(key) : (consumed_.insert(key), fallback);
}

double JsonObjectReader::number(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_number()) throw ConfigError(path_of(key) + ": expected a number");
  return v.get<double>();
}

double JsonObjectReader::number_or(const std::string& key, double fallback) {
  return has(key) ? number(key) : (consumed_.insert(key), fallback);
}

std::int64_t JsonObjectReader::integer(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_number_integer()) throw ConfigError(path_of(key) + ": expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t JsonObjectReader::integer_or(const std::string& key, std::int64_t fallback) {
  return has(key) ? integer(key) : (consumed_.insert(key), fallback);
}

std::uint64_t JsonObjectReader::unsigned_or(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) {
    consumed_.insert(key);
    return fallback;
  }
  const auto& v = required(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(path_of(key) + ": expected a non-negative integer");
}

bool JsonObjectReader::boolean_or(const std::string& key, bool fallback) {
  if (!has(key)) {
    consumed_.insert(key);
    return fallback;
  }
  const auto& v = required(key);
  if (!v.is_boolean()) throw ConfigError(path_of(key) + ": expected a boolean");
  return v.get<bool>();
}

std::vector<double> JsonObjectReader::numbers(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_array()) throw ConfigError(path_of(key) + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path_of(key) + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<std::string> JsonObjectReader::strings_or(const std::string& key, std::vector<std::string> fallback) {
  if (!has(key)) {
    consumed_.insert(key);
    return fallback;
  }
  const auto& v = required(key);
  if (!v.is_array()) throw ConfigError(path_of(key) + ": expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw ConfigError(path_of(key) + "[" + std::to_string(i) + "]: expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

JsonObjectReader JsonObjectReader::object(const std::string& key) {
  return JsonObjectReader(required(key), path_of(key));
}

void JsonObjectReader::finish() const {
  for (const auto& [key, value] : object_.items()) {
    if (!consumed_.contains(key)) throw ConfigError(path_of(key) + ": unknown field");
  }
}

}  // namespace refscore
