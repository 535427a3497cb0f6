// Copyright 2026 The safe_ope Authors
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

#include <sstream>
#include <string>

#include "harness/config.hpp"
#include "harness/format.hpp"
#include "json.hpp"

namespace safe_ope::harness {

using nlohmann::ordered_json;

inline std::string output_path(const ExperimentConfig& config, const std::string& name) {
  return config.output + "/" + name;
}

/// Writes config.txt, the resolved configuration with the tool version.
inline void write_config_copy(const ExperimentConfig& config) {
  write_text_file(output_path(config, "config.txt"), to_text(config));
}

inline void write_json_file(const ExperimentConfig& config, const std::string& name,
                            const ordered_json& doc) {
  write_text_file(output_path(config, name), doc.dump(1) + "\n");
}

template <class Writer>
void write_stream_file(const ExperimentConfig& config, const std::string& name, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_text_file(output_path(config, name), out.str());
}

}  // namespace safe_ope::harness
