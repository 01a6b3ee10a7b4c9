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

#ifndef ASRKIT_CONFIG_HPP
#define ASRKIT_CONFIG_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "asrkit/common.hpp"

namespace asrkit {

// Flat key/value configuration with dotted keys (`frontend.num_cepstra`).
// Getters remember which keys were touched so unknown keys can be
// rejected after a tool has pulled everything it understands.
class Config {
 public:
  Config() = default;

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // DataError when any stored key was never read
  void reject_unknown_keys() const;
  // same, restricted to keys under the given section prefixes; lets one
  // shared config file drive several pipeline steps
  void reject_unknown_keys(const std::vector<std::string>& sections) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }
  std::uint64_t content_hash() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> touched_;
};

// `[section]` headers plus `key = value` lines; keys become
// `section.key`. '#' starts a comment.
Config load_config(const std::string& path);

// `section.key=value` command-line override
void apply_override(Config& config, const std::string& assignment);

// resolved `[section]`-style dump, written next to step outputs
void save_config(const Config& config, const std::string& path);

// FNV-1a over a file's bytes; DataError when unreadable.
std::uint64_t hash_file(const std::string& path);

// Content-addressed step manifest for idempotent pipeline reruns: a step
// is up to date when every input hash and the config hash match.
struct StepManifest {
  std::string step_name;
  std::map<std::string, std::uint64_t> input_hashes;  // path -> hash
  std::uint64_t config_hash = 0;
  std::vector<std::string> outputs;
};

void save_manifest(const StepManifest& manifest, const std::string& path);
StepManifest load_manifest_file(const std::string& path);

// true when the manifest exists, hashes match, and all outputs exist
bool step_up_to_date(const std::string& manifest_path,
                     const StepManifest& expected);

StepManifest make_manifest(const std::string& step_name,
                           const std::vector<std::string>& inputs,
                           const Config& config,
                           const std::vector<std::string>& outputs);

}  // namespace asrkit

#endif  // ASRKIT_CONFIG_HPP
