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

#include <string>

namespace safe_ope::harness {

/// Shortest text that reads back to the same double.
std::string format_double(double x);

/// Writes `content` to `path`, creating parent directories; throws ConfigError
/// if the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

std::string tool_version();

}  // namespace safe_ope::harness
