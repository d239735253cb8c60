// Copyright 2026 The cemmaf Authors.
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

// Flat `key = value` text: one pair per line, '#' starts a comment, blank
// lines ignored. Duplicate keys are errors.

#ifndef CEMMAF_KEY_VALUE_HPP_
#define CEMMAF_KEY_VALUE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cemmaf {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_value_file(const std::filesystem::path& path);

// Strict conversions; ConfigError names the key on failure.
double parse_real(const std::string& key, const std::string& value);
std::uint64_t parse_count(const std::string& key, const std::string& value);

// Shortest text that parses back to the same double.
std::string format_real(double value);

}  // namespace cemmaf

#endif  // CEMMAF_KEY_VALUE_HPP_
