// Copyright 2026 The G2ST Toolkit Authors.
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

#ifndef G2ST_COMMON_HPP_
#define G2ST_COMMON_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace g2st {

// Error categories. The numeric values are shared with the C API status codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kParse = 4,
  kOutOfRange = 5,
  kNumeric = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Splits UTF-8 text into Unicode scalar values, each returned as its own
// byte string. Malformed bytes come back as single-byte strings so the
// concatenation of the result always equals the input.
std::vector<std::string> Utf8Chars(std::string_view text);

// Number of entries Utf8Chars would return.
std::size_t Utf8Length(std::string_view text);

// 64-bit FNV-1a; stable across platforms, used for config fingerprints.
std::uint64_t Fnv1a64(std::string_view bytes);
std::string Hex64(std::uint64_t value);

// SplitMix64 finalizer combining a seed with a stream index.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

// Uniform double in [0, 1) from 53 high bits of a 64-bit draw.
inline double UnitFromBits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Strips ASCII whitespace from both ends.
std::string_view Trim(std::string_view text);

}  // namespace g2st

#endif  // G2ST_COMMON_HPP_
