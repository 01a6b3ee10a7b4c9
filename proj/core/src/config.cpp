// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "asrkit/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace asrkit {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw DataError("empty config key");
  entries_[key] = value;
}

bool Config::has(const std::string& key) const {
  touched_.insert(key);
  return entries_.count(key) > 0;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key " + key + ": not an integer: " + it->second);
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key " + key + ": not a number: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw DataError("config key " + key + ": not a boolean: " + it->second);
}

void Config::reject_unknown_keys() const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : entries_)
    if (!touched_.count(key)) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw DataError(msg);
  }
}

void Config::reject_unknown_keys(
    const std::vector<std::string>& sections) const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : entries_) {
    if (touched_.count(key)) continue;
    for (const auto& s : sections)
      if (key.rfind(s + ".", 0) == 0) {
        unknown.push_back(key);
        break;
      }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw DataError(msg);
  }
}

std::uint64_t Config::content_hash() const {
  std::string flat;
  for (const auto& [key, value] : entries_)
    flat += key + "=" + value + "\n";
  return fnv1a(flat.data(), flat.size());
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  Config config;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw DataError(path + ":" + std::to_string(lineno) + ": empty key");
    config.set(section.empty() ? key : section + "." + key, value);
  }
  return config;
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw DataError("override must look like section.key=value: " +
                    assignment);
  config.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void save_config(const Config& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config file: " + path);
  std::string section;
  for (const auto& [key, value] : config.entries()) {
    const auto dot = key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key
                                                      : key.substr(dot + 1);
    if (sec != section) {
      section = sec;
      out << "[" << section << "]\n";
    }
    out << name << " = " << value << "\n";
  }
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  return fnv1a(data.data(), data.size());
}

void save_manifest(const StepManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << "step " << manifest.step_name << "\n";
  out << "config " << manifest.config_hash << "\n";
  for (const auto& [p, h] : manifest.input_hashes)
    out << "input " << h << " " << p << "\n";
  for (const auto& o : manifest.outputs) out << "output " << o << "\n";
}

StepManifest load_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  StepManifest manifest;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "step") ss >> manifest.step_name;
    else if (tag == "config") ss >> manifest.config_hash;
    else if (tag == "input") {
      std::uint64_t h;
      std::string p;
      ss >> h;
      std::getline(ss, p);
      manifest.input_hashes[trim(p)] = h;
    } else if (tag == "output") {
      std::string p;
      std::getline(ss, p);
      manifest.outputs.push_back(trim(p));
    } else if (!tag.empty()) {
      throw DataError(path + ": unknown manifest line: " + line);
    }
  }
  return manifest;
}

bool step_up_to_date(const std::string& manifest_path,
                     const StepManifest& expected) {
  if (!std::filesystem::exists(manifest_path)) return false;
  StepManifest stored;
  try {
    stored = load_manifest_file(manifest_path);
  } catch (const DataError&) {
    return false;
  }
  if (stored.step_name != expected.step_name ||
      stored.config_hash != expected.config_hash ||
      stored.input_hashes != expected.input_hashes)
    return false;
  for (const auto& o : stored.outputs)
    if (!std::filesystem::exists(o)) return false;
  return stored.outputs == expected.outputs;
}

StepManifest make_manifest(const std::string& step_name,
                           const std::vector<std::string>& inputs,
                           const Config& config,
                           const std::vector<std::string>& outputs) {
  StepManifest manifest;
  manifest.step_name = step_name;
  for (const auto& p : inputs) manifest.input_hashes[p] = hash_file(p);
  manifest.config_hash = config.content_hash();
  manifest.outputs = outputs;
  return manifest;
}

}  // namespace asrkit
