// Copyright 2026 The EAPMT Authors
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
#include <string_view>
#include <vector>

namespace eapmt::csv {

// RFC 4180: fields containing comma, quote, CR or LF are quoted.
std::string escape(std::string_view field);
std::string row(const std::vector<std::string>& fields);

// Parses quoted fields and embedded newlines. Throws Error(kParse) on an
// unterminated quote. A trailing newline does not produce an empty row.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace eapmt::csv
