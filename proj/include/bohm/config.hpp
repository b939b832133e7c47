#pragma once

// Strict JSON configuration reader. Every key a parser reads is recorded;
// after parsing, any key that was never read is reported as unknown.

#include <memory>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "bohm/error.hpp"

namespace bohm::config {

/// Validation failure. The message starts with the offending config path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class Section {
 public:
  /// Root section of a document.
  explicit Section(const nlohmann::json& root);

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const;

  bool has(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  /// String restricted to `choices`.
  std::string choice(const std::string& key, const std::vector<std::string>& choices) const;
  std::string choice(const std::string& key, const std::vector<std::string>& choices,
                     const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& key) const;
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const;

  Section child(const std::string& key) const;
  std::vector<Section> children(const std::string& key) const;

  /// Range helpers; the message names key_path(key).
  double positive(const std::string& key) const;
  double positive(const std::string& key, double fallback) const;
  long at_least(const std::string& key, long minimum) const;
  long at_least(const std::string& key, long minimum, long fallback) const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  /// Throws ConfigError naming the first key of the document never read.
  void reject_unknown() const;

 private:
  Section(const nlohmann::json* node, std::string path, std::shared_ptr<std::set<std::string>> used);
  const nlohmann::json& value(const std::string& key) const;

  const nlohmann::json* node_;
  std::string path_;
  std::shared_ptr<std::set<std::string>> used_;
};

}  // namespace bohm::config
