// Copyright 2026 The cmaze Authors
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


#ifndef CMAZE_CONFIG_H_
#define CMAZE_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cmaze/pipeline.h"

namespace cmaze {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  int capacity = 8;
  std::string log_dir = "sessions";
};

// Full experiment description. Every key is optional in the file; missing
// keys keep the defaults below.
struct ExperimentConfig {
  LearningConfig learning;
  ServerConfig server;
  std::string output_dir = "out";

  // Throws ConfigError naming the offending key.
  void Validate() const;
};

nlohmann::json ConfigToJson(const ExperimentConfig& config);
ExperimentConfig ConfigFromJson(const nlohmann::json& j);

// Reads and validates a config file. Throws ConfigError mentioning `path`
// if it cannot be read or parsed.
ExperimentConfig LoadConfig(const std::string& path);

}  // namespace cmaze

#endif  // CMAZE_CONFIG_H_
