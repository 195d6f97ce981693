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

namespace eapmt::unicode {

// Decodes UTF-8; throws Error(kParse) on malformed input.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view text);

std::string nfc(std::string_view utf8);
std::string to_lower(std::string_view utf8);

// Whitespace as understood by Python's str.isspace(), which is what the
// reference BLEU tooling splits on.
bool is_space(char32_t cp);

// Han ideographs (for language heuristics).
bool is_han(char32_t cp);
bool contains_han(std::string_view utf8);

// Characters the reference zh BLEU tokenizer isolates into single tokens.
bool is_zh_token_char(char32_t cp);

std::string trim(std::string_view utf8);
std::vector<std::string> split_whitespace(std::string_view utf8);
// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view utf8);

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace eapmt::unicode
