// Copyright (c) 2026 The emotts Authors
//
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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "emotts/acoustic.hpp"
#include "emotts/classifier.hpp"
#include "emotts/ranker.hpp"

namespace emotts {

// Environment variable naming a config file when --config is absent.
inline constexpr const char* kConfigEnv = "EMOTTS_CONFIG";

// Flat key=value run settings. Every key has a default; unknown keys are
// rejected so typos fail loudly. Model fields live under "model.".
class RunConfig {
 public:
  RunConfig();

  // '#' starts a comment; blank lines are ignored.
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void set_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const { return get(key); }

  ModelConfig model_config() const;
  RankerOptions ranker_options() const;
  ClassifierConfig classifier_config() const;
  GeneratorConfig generator_config() const;

  // Sorted key=value lines.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Runs one subcommand. Returns 0 on success; on failure prints a diagnostic
// (and usage for argument errors) to err and returns nonzero.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emotts
