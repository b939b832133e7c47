#include "bohm/config.hpp"

#include <algorithm>
#include <cmath>

namespace bohm::config {

using nlohmann::json;

Section::Section(const json& root) : Section(&root, "", std::make_shared<std::set<std::string>>()) {
  if (!root.is_object()) throw ConfigError("<root>", "config must be a JSON object");
}

Section::Section(const json* node, std::string path, std::shared_ptr<std::set<std::string>> used)
    : node_(node), path_(std::move(path)), used_(std::move(used)) {}

std::string Section::key_path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool Section::has(const std::string& key) const { return node_->contains(key); }

void Section::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(key_path(key), what);
}

const json& Section::value(const std::string& key) const {
  auto it = node_->find(key);
  if (it == node_->end()) fail(key, "required key is missing");
  used_->insert(key_path(key));
  return *it;
}

double Section::number(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "expected a finite number");
  return x;
}

double Section::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Section::integer(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_number_integer()) fail(key, "expected an integer");
  return v.get<long>();
}

long Section::integer(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Section::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const json& v = value(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    fail(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool Section::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& v = value(key);
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::string Section::string(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::string Section::choice(const std::string& key, const std::vector<std::string>& choices) const {
  const std::string s = string(key);
  if (std::find(choices.begin(), choices.end(), s) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    fail(key, "unknown value \"" + s + "\" (expected one of: " + list + ")");
  }
  return s;
}

std::string Section::choice(const std::string& key, const std::vector<std::string>& choices,
                            const std::string& fallback) const {
  return has(key) ? choice(key, choices) : fallback;
}

std::vector<double> Section::numbers(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> Section::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<int> Section::integers(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_array()) fail(key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(key, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<int> Section::integers(const std::string& key, std::vector<int> fallback) const {
  return has(key) ? integers(key) : fallback;
}

Section Section::child(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_object()) fail(key, "expected an object");
  return Section(&v, key_path(key), used_);
}

std::vector<Section> Section::children(const std::string& key) const {
  const json& v = value(key);
  if (!v.is_array()) fail(key, "expected an array of objects");
  std::vector<Section> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = key_path(key) + "[" + std::to_string(i) + "]";
    if (!v[i].is_object()) throw ConfigError(p, "expected an object");
    used_->insert(p);
    out.push_back(Section(&v[i], p, used_));
  }
  return out;
}

double Section::positive(const std::string& key) const {
  const double x = number(key);
  if (!(x > 0.0)) fail(key, "must be positive");
  return x;
}

double Section::positive(const std::string& key, double fallback) const {
  return has(key) ? positive(key) : fallback;
}

long Section::at_least(const std::string& key, long minimum) const {
  const long x = integer(key);
  if (x < minimum) fail(key, "must be >= " + std::to_string(minimum) + " (got " + std::to_string(x) + ")");
  return x;
}

long Section::at_least(const std::string& key, long minimum, long fallback) const {
  return has(key) ? at_least(key, minimum) : fallback;
}

namespace {

void walk(const json& node, const std::string& path, const std::set<std::string>& used) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string p = path.empty() ? it.key() : path + "." + it.key();
      if (!used.count(p)) throw ConfigError(p, "unknown key");
      walk(it.value(), p, used);
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i)
      if (node[i].is_object()) walk(node[i], path + "[" + std::to_string(i) + "]", used);
  }
}

}  // namespace

void Section::reject_unknown() const { walk(*node_, path_, *used_); }

}  // namespace bohm::config
