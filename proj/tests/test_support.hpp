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

#ifndef SELFSTAB_TESTS_TEST_SUPPORT_HPP_
#define SELFSTAB_TESTS_TEST_SUPPORT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "selfstab/value.hpp"

namespace selfstab::testing {

// Word-delivery verdicts. A delivered word is compared against the
// cyclic source script in three strengths:
//   exact     the word is a contiguous window of script^inf
//   at-least  runs follow the script's runs in order, every complete
//             run at least as long as the script's
//   each-once runs follow the script's runs in order (lengths free)

inline std::vector<std::pair<uint8_t, size_t>> run_lengths(const Word& w) {
  std::vector<std::pair<uint8_t, size_t>> runs;
  for (uint8_t v : w) {
    if (!runs.empty() && runs.back().first == v)
      ++runs.back().second;
    else
      runs.emplace_back(v, 1);
  }
  return runs;
}

inline bool matches_exact_cycles(const Word& word, const Word& script) {
  if (word.empty()) return true;
  for (size_t offset = 0; offset < script.size(); ++offset) {
    bool ok = true;
    for (size_t j = 0; j < word.size() && ok; ++j)
      ok = word[j] == script[(offset + j) % script.size()];
    if (ok) return true;
  }
  return false;
}

namespace detail {

// Alignment of word runs against the script's cyclic run sequence.
// check_lengths skips the (possibly truncated) boundary runs.
inline bool runs_align(const Word& word, const Word& script,
                       bool check_lengths) {
  auto sruns = run_lengths(script);
  // wrap must not merge runs, else cyclic run alignment is ill-defined
  if (sruns.size() >= 2 && sruns.front().first == sruns.back().first)
    throw UsageError("script wraps onto its own first run");
  auto wruns = run_lengths(word);
  if (wruns.empty()) return true;
  if (sruns.size() == 1)
    return wruns.size() == 1 && wruns[0].first == sruns[0].first;
  for (size_t offset = 0; offset < sruns.size(); ++offset) {
    bool ok = true;
    for (size_t i = 0; i < wruns.size() && ok; ++i) {
      const auto& expect = sruns[(offset + i) % sruns.size()];
      if (wruns[i].first != expect.first) ok = false;
      if (ok && check_lengths && i > 0 && i + 1 < wruns.size() &&
          wruns[i].second < expect.second)
        ok = false;
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace detail

inline bool matches_at_least_cycles(const Word& word, const Word& script) {
  return detail::runs_align(word, script, true);
}

inline bool matches_each_once_cycles(const Word& word, const Word& script) {
  return detail::runs_align(word, script, false);
}

}  // namespace selfstab::testing

#endif  // SELFSTAB_TESTS_TEST_SUPPORT_HPP_
