/*
 * Copyright (c) 2026, the selfstab authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

#ifndef SELFSTAB_VALUE_HPP_
#define SELFSTAB_VALUE_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfstab {

/// Invalid input from a caller (bad id, wrong domain, malformed file).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Instance too large for exhaustive exploration.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * The finite message alphabet. Message registers and message-typed
 * process locals range over exactly these symbols, which keeps every
 * state space finite. Default is {a, b, c}.
 */
class Alphabet {
 public:
  Alphabet() : symbols_("abc") {}

  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw UsageError("alphabet must be nonempty");
    for (size_t i = 0; i < symbols_.size(); ++i)
      for (size_t j = i + 1; j < symbols_.size(); ++j)
        if (symbols_[i] == symbols_[j])
          throw UsageError("alphabet symbols must be distinct");
    if (symbols_.size() > 64) throw UsageError("alphabet too large");
  }

  size_t size() const { return symbols_.size(); }
  char symbol(uint8_t index) const { return symbols_.at(index); }
  const std::string& symbols() const { return symbols_; }

  uint8_t index_of(char c) const {
    auto pos = symbols_.find(c);
    if (pos == std::string::npos)
      throw UsageError(std::string("symbol '") + c + "' not in alphabet");
    return static_cast<uint8_t>(pos);
  }

  bool operator==(const Alphabet&) const = default;

 private:
  std::string symbols_;
};

/// A message stream as alphabet indices.
using Word = std::vector<uint8_t>;

inline Word word_from_string(const Alphabet& sigma, const std::string& s) {
  if (s.empty()) throw UsageError("source script must be nonempty");
  Word w;
  w.reserve(s.size());
  for (char c : s) w.push_back(sigma.index_of(c));
  return w;
}

inline std::string word_to_string(const Alphabet& sigma, const Word& w) {
  std::string s;
  s.reserve(w.size());
  for (uint8_t v : w) s.push_back(sigma.symbol(v));
  return s;
}

enum class ValueTag : uint8_t { Message, Bit };

/**
 * A register or local value: either a member of the alphabet (stored
 * as its index) or an alternating-protocol bit. Corruption respects
 * this typing: a corrupted bit register still holds a bit.
 */
struct Value {
  ValueTag tag;
  uint8_t raw;

  static Value message(uint8_t symbol_index) {
    return Value{ValueTag::Message, symbol_index};
  }
  static Value bit(uint8_t b) {
    if (b > 1) throw UsageError("bit value must be 0 or 1");
    return Value{ValueTag::Bit, b};
  }

  bool operator==(const Value&) const = default;
};

inline std::string format_value(const Alphabet& sigma, Value v) {
  if (v.tag == ValueTag::Message) return std::string(1, sigma.symbol(v.raw));
  return v.raw ? "1" : "0";
}

}  // namespace selfstab

#endif  // SELFSTAB_VALUE_HPP_
