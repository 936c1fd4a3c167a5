/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <string>
#include <string_view>

namespace ragcheck {

// Minimal UTF-8 handling, enough for French/English text: ASCII plus the
// Latin-1 supplement (accented letters) and the oe ligature. Anything else
// passes through untouched.

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// True when text[pos] starts a whitespace glyph; advances len to its size.
inline bool is_space_at(std::string_view text, size_t pos, size_t& len) {
  if (pos >= text.size()) return false;
  if (is_ascii_space(text[pos])) {
    len = 1;
    return true;
  }
  // U+00A0 no-break space, common in French typography.
  if (pos + 1 < text.size() && static_cast<unsigned char>(text[pos]) == 0xC2 &&
      static_cast<unsigned char>(text[pos + 1]) == 0xA0) {
    len = 2;
    return true;
  }
  return false;
}

// True when an uppercase letter or a digit starts at text[pos].
inline bool is_upper_or_digit_at(std::string_view text, size_t pos) {
  if (pos >= text.size()) return false;
  const unsigned char c = static_cast<unsigned char>(text[pos]);
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
  if (c == 0xC3 && pos + 1 < text.size()) {
    const unsigned char d = static_cast<unsigned char>(text[pos + 1]);
    return d >= 0x80 && d <= 0x9E && d != 0x97;  // U+00C0..U+00DE minus the times sign
  }
  if (c == 0xC5 && pos + 1 < text.size()) {
    return static_cast<unsigned char>(text[pos + 1]) == 0x92;  // U+0152 OE ligature
  }
  return false;
}

// Case folding over ASCII and Latin-1; leaves other bytes alone.
inline std::string fold_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c + 32));
    } else if (c == 0xC3 && i + 1 < text.size()) {
      const unsigned char d = static_cast<unsigned char>(text[i + 1]);
      out.push_back(static_cast<char>(c));
      if (d >= 0x80 && d <= 0x9E && d != 0x97) {
        out.push_back(static_cast<char>(d + 0x20));
      } else {
        out.push_back(static_cast<char>(d));
      }
      ++i;
    } else if (c == 0xC5 && i + 1 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x92) {
      out.push_back(static_cast<char>(0xC5));
      out.push_back(static_cast<char>(0x93));
      ++i;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  size_t len = 0;
  while (b < e && is_space_at(s, b, len)) b += len;
  // Walk back over trailing whitespace (1- or 2-byte).
  while (e > b) {
    if (is_ascii_space(s[e - 1])) {
      --e;
    } else if (e - b >= 2 && static_cast<unsigned char>(s[e - 2]) == 0xC2 &&
               static_cast<unsigned char>(s[e - 1]) == 0xA0) {
      e -= 2;
    } else {
      break;
    }
  }
  return s.substr(b, e - b);
}

// Text with every whitespace glyph removed, for "equal modulo whitespace"
// comparisons.
inline std::string strip_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    size_t len = 0;
    if (is_space_at(s, i, len)) {
      i += len;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

inline bool contains_fold(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  return fold_lower(haystack).find(fold_lower(needle)) != std::string::npos;
}

// FNV-1a, used to fingerprint rendered prompts in run manifests.
inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace ragcheck
