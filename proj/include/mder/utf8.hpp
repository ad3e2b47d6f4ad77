// Copyright 2026 The MDER Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>

namespace mder::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws ValidationError on
// malformed input (overlong forms, surrogates, truncated sequences).
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

bool is_space(char32_t c);

// ASCII-only case folding; other scalars pass through unchanged.
char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view s);
std::string to_lower(std::string_view s);

// Tabs, newlines and other line breaks become a single space each.
std::u32string normalize_controls(std::u32string_view s);

std::string trim(std::string_view s);

// Trims and collapses every internal whitespace run to one space.
std::string collapse_whitespace(std::string_view s);

}  // namespace mder::utf8
