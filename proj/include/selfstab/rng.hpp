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

#ifndef SELFSTAB_RNG_HPP_
#define SELFSTAB_RNG_HPP_

#include <cstdint>

namespace selfstab {

/**
 * Deterministic pseudo-random stream (splitmix64).
 *
 * Every randomized operation in the library is a pure function of its
 * seed, so runs replay bit-identically across platforms. std::mt19937
 * is avoided because the standard distributions are not portable.
 */
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling keeps the
  // distribution exact.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  // Uniform double in [0, 1) with 53 bits of entropy.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Derives an independent seed from (seed, tag); used to split one
  // user-facing seed into per-purpose streams.
  static uint64_t derive(uint64_t seed, uint64_t tag) {
    Rng r(seed ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL));
    return r.next();
  }

 private:
  uint64_t state_;
};

}  // namespace selfstab

#endif  // SELFSTAB_RNG_HPP_
