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

#ifndef SELFSTAB_CHECKER_HPP_
#define SELFSTAB_CHECKER_HPP_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfstab/config.hpp"
#include "selfstab/machine.hpp"
#include "selfstab/scheduler.hpp"

namespace selfstab {

enum class Property : uint8_t {
  WrongWriting,      // echo write outside its update context
  ReadCheckingWrite, // message write without the peer's permission
  WeakRVMissedRead,  // no read between consecutive message writes
  QuasiRVExtraRead,  // more than one read between complete writings
  QuasiRVMissedRead  // no read between consecutive complete writings
};

inline const char* property_name(Property p) {
  switch (p) {
    case Property::WrongWriting: return "WrongWriting";
    case Property::ReadCheckingWrite: return "ReadCheckingWrite";
    case Property::WeakRVMissedRead: return "WeakRVMissedRead";
    case Property::QuasiRVExtraRead: return "QuasiRVExtraRead";
    case Property::QuasiRVMissedRead: return "QuasiRVMissedRead";
  }
  return "?";
}

/**
 * One property failure. `step` is the event that completes the
 * violation; (writer, reader) is the link direction whose guarantee
 * broke (the message writer first).
 */
struct Violation {
  Property property;
  uint64_t step;
  int writer;
  int reader;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// ---------------------------------------------------------------------------
// Trace replay.
//
// Checkers reconstruct register and pc state by applying the recorded
// events mechanically. Registers change only through write events, so
// this stays exact even for traces produced by harnesses that corrupt
// process locals mid-run (locals are deliberately not tracked here).

namespace detail {

class EventApplier {
 public:
  EventApplier(const System& sys, const Trace& trace)
      : sys_(sys), cfg_(trace.initial) {}

  const Configuration& config() const { return cfg_; }

  void apply(const Event& ev) {
    if (ev.action == StepAction::Write)
      cfg_.regs[sys_.layout().index_of(sys_.topology(), ev.reg)] =
          ev.value.raw;
    cfg_.procs[ev.process].pc = ev.pc_after;
  }

 private:
  const System& sys_;
  Configuration cfg_;
};

struct OwnEvent {
  StepAction action;
  RegisterId reg;
};

inline bool is_read_of(const OwnEvent& e, int owner, int peer,
                       RegisterKind kind) {
  return e.action == StepAction::Read && e.reg.owner == owner &&
         e.reg.peer == peer && e.reg.kind == kind;
}

}  // namespace detail

/// Strict form of the trace invariant: re-executing the recorded
/// process sequence from the initial configuration must reproduce
/// every event and the final configuration.
inline bool validate_trace(const System& sys, const Trace& trace) {
  Configuration cfg = trace.initial;
  for (size_t i = 0; i < trace.events.size(); ++i) {
    const Event& want = trace.events[i];
    Event got = apply_step(sys, cfg, want.process, want.step_index);
    if (!(got == want)) return false;
  }
  return cfg == trace.final_config;
}

// ---------------------------------------------------------------------------
// Wrong writings.

/**
 * Flags every echo write performed outside its update context:
 *
 *   echo protocols   write(Read_pq) not immediately preceded, among
 *                    p's own events, by read(Write_qp);
 *   weak rendezvous  write(CheckControl_pq) whose two preceding own
 *                    events are not read(Control_qp); read(Write_qp);
 *   quasi rendezvous write(CheckControl_pq) whose four preceding own
 *                    events are not the full-reading prefix
 *                    read(Control_qp); read(CheckControl_pq);
 *                    read(Write_qp); read(Control_qp).
 *
 * Such writes are possible only while a corrupted program counter is
 * still inside an update sequence, i.e. at most once per process.
 */
inline std::vector<Violation> wrong_writings(const System& sys,
                                             const Trace& trace) {
  const bool quasi = sys.kind() == ProtocolKind::QuasiRendezvous;
  const bool weak = sys.kind() == ProtocolKind::WeakRendezvous;
  std::vector<Violation> out;
  std::vector<std::deque<detail::OwnEvent>> hist(sys.process_count());

  for (const Event& ev : trace.events) {
    auto& h = hist[ev.process];
    const bool echo_write =
        ev.action == StepAction::Write &&
        (ev.reg.kind == RegisterKind::Read ||
         ev.reg.kind == RegisterKind::CheckControl) &&
        ev.reg.owner == ev.process;
    if (echo_write) {
      const int p = ev.reg.owner;
      const int q = ev.reg.peer;
      bool contextual = false;
      if (quasi) {
        contextual =
            h.size() >= 4 &&
            detail::is_read_of(h[h.size() - 4], q, p, RegisterKind::Control) &&
            detail::is_read_of(h[h.size() - 3], p, q,
                               RegisterKind::CheckControl) &&
            detail::is_read_of(h[h.size() - 2], q, p, RegisterKind::Write) &&
            detail::is_read_of(h[h.size() - 1], q, p, RegisterKind::Control);
      } else if (weak) {
        contextual =
            h.size() >= 2 &&
            detail::is_read_of(h[h.size() - 2], q, p, RegisterKind::Control) &&
            detail::is_read_of(h[h.size() - 1], q, p, RegisterKind::Write);
      } else {
        contextual = !h.empty() &&
                     detail::is_read_of(h.back(), q, p, RegisterKind::Write);
      }
      if (!contextual)
        out.push_back(Violation{Property::WrongWriting, ev.step_index, q, p,
                                "process " + std::to_string(p) +
                                    " echoed toward " + std::to_string(q) +
                                    " outside an update"});
    }
    h.push_back(detail::OwnEvent{ev.action, ev.reg});
    if (h.size() > 4) h.pop_front();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-link correctness checkers.

/**
 * Echo-protocol correctness: every write by `a` into Write_ab, other
 * than a's first one and those before b's first event, must happen
 * while Read_ba = Write_ab in the immediately preceding configuration.
 */
inline std::vector<Violation> check_read_checking(const System& sys,
                                                  const Trace& trace, int a,
                                                  int b) {
  sys.topology().neighbor_index(a, b);  // validates the edge
  std::vector<Violation> out;
  detail::EventApplier state(sys, trace);
  uint64_t writes = 0;
  bool reader_seen = false;
  for (const Event& ev : trace.events) {
    if (ev.process == a && ev.action == StepAction::Write &&
        ev.reg == RegisterId{a, b, RegisterKind::Write}) {
      if (writes >= 1 && reader_seen &&
          !allows_write(sys, state.config(), a, b))
        out.push_back(
            Violation{Property::ReadCheckingWrite, ev.step_index, a, b,
                      "write without permission (Read_ba != Write_ab)"});
      ++writes;
    }
    if (ev.process == b) reader_seen = true;
    state.apply(ev);
  }
  return out;
}

/**
 * Weak-rendezvous correctness: between the xth (x >= 2) and the
 * (x+1)th write into Write_ab, both after b's first event, b must
 * read Write_ab at least once.
 */
inline std::vector<Violation> check_weak_rendezvous(const System& sys,
                                                    const Trace& trace, int a,
                                                    int b) {
  sys.topology().neighbor_index(a, b);
  std::vector<Violation> out;
  uint64_t writes = 0;
  uint64_t reads_since = 0;
  bool reader_seen = false;
  bool last_write_qualified = false;
  for (const Event& ev : trace.events) {
    if (ev.process == b) {
      reader_seen = true;
      if (ev.action == StepAction::Read &&
          ev.reg == RegisterId{a, b, RegisterKind::Write})
        ++reads_since;
    }
    if (ev.process == a && ev.action == StepAction::Write &&
        ev.reg == RegisterId{a, b, RegisterKind::Write}) {
      if (last_write_qualified && reads_since == 0)
        out.push_back(Violation{Property::WeakRVMissedRead, ev.step_index, a,
                                b, "no read between writes " +
                                       std::to_string(writes) + " and " +
                                       std::to_string(writes + 1)});
      ++writes;
      last_write_qualified = (writes >= 2) && reader_seen;
      reads_since = 0;
    }
  }
  return out;
}

/**
 * Quasi-rendezvous correctness: between consecutive complete writings
 * into Write_ab (the write/read-bit/flip-bit triple), after a's second
 * complete writing and b's first three events, b reads Write_ab
 * exactly once.
 */
inline std::vector<Violation> check_quasi_rendezvous(const System& sys,
                                                     const Trace& trace, int a,
                                                     int b) {
  sys.topology().neighbor_index(a, b);
  std::vector<Violation> out;
  const RegisterId value_reg{a, b, RegisterKind::Write};
  const RegisterId bit_reg{a, b, RegisterKind::Control};
  int phase = 0;
  uint64_t pending_write_step = 0;
  uint64_t cw_count = 0;
  uint64_t reads_since = 0;
  uint64_t reader_events = 0;
  bool interval_qualified = false;  // current interval start qualifies
  for (const Event& ev : trace.events) {
    if (ev.process == b) {
      ++reader_events;
      if (ev.action == StepAction::Read && ev.reg == value_reg) {
        ++reads_since;
        if (interval_qualified && reads_since >= 2)
          out.push_back(Violation{Property::QuasiRVExtraRead, ev.step_index,
                                  a, b,
                                  "read " + std::to_string(reads_since) +
                                      " of one write interval"});
      }
    }
    if (ev.process == a) {
      // complete-writing pattern over a's own events
      if (ev.action == StepAction::Write && ev.reg == value_reg) {
        phase = 1;
        pending_write_step = ev.step_index;
      } else if (phase == 1 && ev.action == StepAction::Read &&
                 ev.reg == bit_reg) {
        phase = 2;
      } else if (phase == 2 && ev.action == StepAction::Write &&
                 ev.reg == bit_reg) {
        phase = 0;
        ++cw_count;
        if (interval_qualified && cw_count >= 2 && reads_since == 0)
          out.push_back(Violation{
              Property::QuasiRVMissedRead, pending_write_step, a, b,
              "no read between complete writings " +
                  std::to_string(cw_count - 1) + " and " +
                  std::to_string(cw_count)});
        interval_qualified = cw_count >= 2 && reader_events >= 3;
        reads_since = 0;
      } else {
        phase = 0;
      }
    }
  }
  return out;
}

/// All kind-appropriate per-link checks plus wrong writings, over all
/// link directions, ordered by step.
inline std::vector<Violation> check_all(const System& sys,
                                        const Trace& trace) {
  std::vector<Violation> out = wrong_writings(sys, trace);
  for (int a = 0; a < sys.process_count(); ++a)
    for (int b : sys.topology().neighbors(a)) {
      std::vector<Violation> link;
      switch (sys.kind()) {
        case ProtocolKind::Basic2P:
        case ProtocolKind::ReadChecking:
          link = check_read_checking(sys, trace, a, b);
          break;
        case ProtocolKind::WeakRendezvous:
          link = check_weak_rendezvous(sys, trace, a, b);
          break;
        case ProtocolKind::QuasiRendezvous:
          link = check_quasi_rendezvous(sys, trace, a, b);
          break;
      }
      out.insert(out.end(), link.begin(), link.end());
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& x, const Violation& y) {
                     return x.step < y.step;
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Delivered words.

/// The sequence of values b obtains by reading Write_ab at or after
/// event index `from_step`.
inline Word delivered_word(const System& sys, const Trace& trace, int a,
                           int b, uint64_t from_step) {
  sys.topology().neighbor_index(a, b);
  Word w;
  const RegisterId reg{a, b, RegisterKind::Write};
  for (const Event& ev : trace.events)
    if (ev.step_index >= from_step && ev.process == b &&
        ev.action == StepAction::Read && ev.reg == reg)
      w.push_back(ev.value.raw);
  return w;
}

// ---------------------------------------------------------------------------
// Rounds.

/**
 * Greedy round decomposition: a round ends as soon as every process
 * has executed 6 * max_degree atomic steps since the round began
 * (enough for a full write phase plus one repeat-loop sweep under any
 * of the protocols). Returns the exclusive end index of each complete
 * round.
 */
inline std::vector<uint64_t> rounds(const Trace& trace, const Topology& topo,
                                    int steps_per_process = 0) {
  const int n = topo.process_count();
  const uint64_t quota =
      steps_per_process > 0 ? steps_per_process : 6 * topo.max_degree();
  std::vector<uint64_t> boundaries;
  std::vector<uint64_t> count(n, 0);
  uint64_t satisfied = 0;
  for (size_t i = 0; i < trace.events.size(); ++i) {
    int p = trace.events[i].process;
    if (++count[p] == quota) ++satisfied;
    if (satisfied == static_cast<uint64_t>(n)) {
      boundaries.push_back(i + 1);
      std::fill(count.begin(), count.end(), 0);
      satisfied = 0;
    }
  }
  return boundaries;
}

// ---------------------------------------------------------------------------
// Stabilization.

struct LinkStabilization {
  int writer;
  int reader;
  /// Earliest event index from which the direction stays clean, or
  /// nullopt when violations run into the end of the trace.
  std::optional<uint64_t> step;
};

struct StabilizationReport {
  std::vector<LinkStabilization> links;
  std::optional<uint64_t> global_step;
  std::optional<uint64_t> rounds_to_stabilize;
  /// Always set: a finite trace can only upper-bound stabilization.
  bool finite_trace_caveat = true;
};

/**
 * Behavioral stabilization point per link direction: one past the last
 * violation the checkers attribute to it. Also reports the global
 * point and its position in rounds. The overload taking precomputed
 * violations avoids re-running the checkers.
 */
inline StabilizationReport stabilization_report(
    const System& sys, const Trace& trace, const std::vector<Violation>& all) {
  StabilizationReport rep;
  rep.finite_trace_caveat = true;
  uint64_t global = 0;
  bool global_none = false;
  for (int a = 0; a < sys.process_count(); ++a)
    for (int b : sys.topology().neighbors(a)) {
      uint64_t last = 0;
      bool any = false;
      for (const Violation& v : all)
        if (v.writer == a && v.reader == b) {
          any = true;
          last = std::max(last, v.step);
        }
      LinkStabilization ls{a, b, std::nullopt};
      uint64_t s = any ? last + 1 : 0;
      if (s < trace.events.size() || s == 0) ls.step = s;
      if (!ls.step)
        global_none = true;
      else
        global = std::max(global, *ls.step);
      rep.links.push_back(ls);
    }
  if (!global_none) {
    rep.global_step = global;
    std::vector<uint64_t> bounds = rounds(trace, sys.topology());
    uint64_t r = 0;
    while (r < bounds.size() && bounds[r] < global) ++r;
    if (global == 0)
      rep.rounds_to_stabilize = 0;
    else if (r < bounds.size())
      rep.rounds_to_stabilize = r + 1;
    // else: stabilization fell inside a trailing partial round; leave unset
  }
  return rep;
}

inline StabilizationReport stabilization_report(const System& sys,
                                                const Trace& trace) {
  return stabilization_report(sys, trace, check_all(sys, trace));
}

// ---------------------------------------------------------------------------
// Liveness.

struct ProcessLiveness {
  uint64_t steps = 0;
  std::vector<uint64_t> writes_per_link;  // by neighbor slot, Write register
  uint64_t loop_exits = 0;

  uint64_t min_writes() const {
    uint64_t m = ~uint64_t{0};
    for (uint64_t w : writes_per_link) m = std::min(m, w);
    return writes_per_link.empty() ? 0 : m;
  }
  bool operator==(const ProcessLiveness&) const = default;
};

/// Exact per-process counts: steps executed, writes into each own
/// Write register, and repeat-loop exits.
inline std::vector<ProcessLiveness> liveness_stats(const System& sys,
                                                   const Trace& trace) {
  std::vector<ProcessLiveness> stats(sys.process_count());
  for (int p = 0; p < sys.process_count(); ++p)
    stats[p].writes_per_link.assign(sys.topology().degree(p), 0);
  for (const Event& ev : trace.events) {
    ProcessLiveness& st = stats[ev.process];
    ++st.steps;
    if (ev.action == StepAction::Write && ev.reg.kind == RegisterKind::Write)
      ++st.writes_per_link[sys.topology().neighbor_index(ev.process,
                                                         ev.reg.peer)];
    const StepProgram& prog = sys.program(ev.process);
    if (prog.pc_in_loop(ev.pc_before) && !prog.pc_in_loop(ev.pc_after))
      ++st.loop_exits;
  }
  return stats;
}

}  // namespace selfstab

#endif  // SELFSTAB_CHECKER_HPP_
