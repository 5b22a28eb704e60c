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

#ifndef SELFSTAB_SCHEDULER_HPP_
#define SELFSTAB_SCHEDULER_HPP_

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "selfstab/config.hpp"
#include "selfstab/machine.hpp"
#include "selfstab/rng.hpp"

namespace selfstab {

enum class SchedulerKind : uint8_t {
  RoundRobin,
  RandomFair,
  BoundedDelayAdversary,
  Scripted
};

/**
 * Central-demon process selection. RoundRobin and RandomFair are fair;
 * the bounded-delay adversary may starve a process for at most k*n
 * consecutive steps and otherwise prefers processes about to write an
 * echo register (the permission-churning accesses); Scripted replays
 * an explicit finite schedule.
 */
class SchedulerPolicy {
 public:
  static SchedulerPolicy round_robin() {
    SchedulerPolicy p;
    p.kind_ = SchedulerKind::RoundRobin;
    return p;
  }

  static SchedulerPolicy random_fair(uint64_t seed) {
    SchedulerPolicy p;
    p.kind_ = SchedulerKind::RandomFair;
    p.seed_ = seed;
    p.rng_state_ = Rng::derive(seed, 0x5c'4e'd1);
    return p;
  }

  static SchedulerPolicy bounded_delay(int k, uint64_t seed) {
    if (k < 1) throw UsageError("adversary delay bound must be >= 1");
    SchedulerPolicy p;
    p.kind_ = SchedulerKind::BoundedDelayAdversary;
    p.k_ = k;
    p.seed_ = seed;
    p.rng_state_ = Rng::derive(seed, 0xad'4e'55);
    return p;
  }

  static SchedulerPolicy scripted(std::vector<int> schedule) {
    SchedulerPolicy p;
    p.kind_ = SchedulerKind::Scripted;
    p.script_ = std::move(schedule);
    return p;
  }

  SchedulerKind kind() const { return kind_; }
  int delay_bound() const { return k_; }
  uint64_t seed() const { return seed_; }

  /// Chooses the next process; nullopt signals an exhausted script.
  std::optional<int> next(const System& sys, const Configuration& cfg) {
    const int n = sys.process_count();
    switch (kind_) {
      case SchedulerKind::RoundRobin: {
        int p = cursor_ % n;
        cursor_ = (cursor_ + 1) % n;
        return p;
      }
      case SchedulerKind::RandomFair: {
        Rng rng(rng_state_);
        int p = static_cast<int>(rng.below(n));
        rng_state_ = rng.next();
        return p;
      }
      case SchedulerKind::BoundedDelayAdversary:
        return next_adversarial(sys, cfg);
      case SchedulerKind::Scripted: {
        if (cursor_ >= script_.size()) return std::nullopt;
        int p = script_[cursor_++];
        if (p < 0 || p >= n)
          throw UsageError("scripted schedule names unknown process " +
                           std::to_string(p));
        return p;
      }
    }
    return std::nullopt;
  }

 private:
  int next_adversarial(const System& sys, const Configuration& cfg) {
    const int n = sys.process_count();
    const int cap = k_ * n;
    if (gaps_.empty()) gaps_.assign(n, 0);

    // Forced window: once a process has waited cap-n+1 steps it gets
    // strict priority (largest gap first), which keeps every gap <= cap.
    int forced = -1;
    for (int p = 0; p < n; ++p)
      if (gaps_[p] >= cap - n + 1 &&
          (forced < 0 || gaps_[p] > gaps_[forced]))
        forced = p;

    int choice;
    if (forced >= 0) {
      choice = forced;
    } else {
      // Adversarial heuristic: prefer processes whose next step writes
      // an echo register (Read / CheckControl), the accesses that can
      // flip write permissions under the peers' feet.
      std::vector<int> preferred;
      for (int p = 0; p < n; ++p) {
        const Step& s = sys.program(p).steps[cfg.procs[p].pc];
        if (s.action == StepAction::Write &&
            (s.reg_kind == RegisterKind::Read ||
             s.reg_kind == RegisterKind::CheckControl))
          preferred.push_back(p);
      }
      Rng rng(rng_state_);
      if (!preferred.empty())
        choice = preferred[rng.below(preferred.size())];
      else
        choice = static_cast<int>(rng.below(n));
      rng_state_ = rng.next();
    }
    for (int p = 0; p < n; ++p) ++gaps_[p];
    gaps_[choice] = 0;
    return choice;
  }

  SchedulerKind kind_ = SchedulerKind::RoundRobin;
  int k_ = 1;
  uint64_t seed_ = 0;
  uint64_t rng_state_ = 0;
  size_t cursor_ = 0;
  std::vector<int> script_;
  std::vector<int> gaps_;
};

/// A bounded computation: the starting snapshot, every executed step
/// and the snapshot reached. Replaying the events from the initial
/// configuration reproduces the final one.
struct Trace {
  Configuration initial;
  std::vector<Event> events;
  Configuration final_config;
};

/**
 * Runs `steps` atomic steps under the policy (central-demon
 * serialization). Stops early only when a scripted schedule runs out.
 */
inline Trace run(const System& sys, Configuration start,
                 SchedulerPolicy policy, uint64_t steps) {
  Trace trace;
  trace.initial = start;
  trace.events.reserve(static_cast<size_t>(std::min<uint64_t>(steps, 1 << 22)));
  Configuration cfg = std::move(start);
  for (uint64_t i = 0; i < steps; ++i) {
    std::optional<int> p = policy.next(sys, cfg);
    if (!p) break;  // end of scripted schedule
    trace.events.push_back(apply_step(sys, cfg, *p, i));
  }
  trace.final_config = std::move(cfg);
  return trace;
}

/**
 * True iff no process goes unscheduled for more than `bound`
 * consecutive events, counting the gaps before a process's first
 * event and after its last one.
 */
inline bool audit_fairness(const Trace& trace, uint64_t bound) {
  const int n = static_cast<int>(trace.initial.procs.size());
  std::vector<uint64_t> last(n, 0);
  std::vector<bool> seen(n, false);
  for (size_t i = 0; i < trace.events.size(); ++i) {
    int p = trace.events[i].process;
    uint64_t gap = seen[p] ? i - last[p] - 1 : i;
    if (gap > bound) return false;
    last[p] = i;
    seen[p] = true;
  }
  for (int p = 0; p < n; ++p) {
    uint64_t gap =
        seen[p] ? trace.events.size() - last[p] - 1 : trace.events.size();
    if (gap > bound) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Scripted schedules as whitespace-separated process ids.

inline std::vector<int> parse_schedule(std::istream& in) {
  std::vector<int> ids;
  int v;
  while (in >> v) ids.push_back(v);
  if (ids.empty()) throw UsageError("schedule file is empty");
  return ids;
}

inline void write_schedule(std::ostream& out, const std::vector<int>& ids) {
  for (size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << ((i + 1) % 20 == 0 ? "\n" : " ");
  if (ids.size() % 20 != 0) out << "\n";
}

}  // namespace selfstab

#endif  // SELFSTAB_SCHEDULER_HPP_
