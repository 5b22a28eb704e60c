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

#ifndef SELFSTAB_PROGRAM_HPP_
#define SELFSTAB_PROGRAM_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "selfstab/registers.hpp"
#include "selfstab/value.hpp"

namespace selfstab {

/**
 * Per-neighbor process locals. Each protocol uses a subset:
 *
 *   Recv     message last read from the neighbor's Write register
 *   SelfMsg  own outgoing message re-read from the own Write register
 *   MsgAck   neighbor's echo of the own message (its Read register)
 *   PeerBit  neighbor's alternating bit
 *   SelfBit  own alternating bit re-read from the own Control register
 *   BitAck   neighbor's echo of the own bit (its CheckControl register)
 *   BitEcho  own echo of the neighbor's bit (own CheckControl register)
 */
enum class LocalSlot : uint8_t {
  Recv,
  SelfMsg,
  MsgAck,
  PeerBit,
  SelfBit,
  BitAck,
  BitEcho
};

enum class StepAction : uint8_t { Read, Write };
enum class RegSide : uint8_t { Own, Peer };
enum class WriteSource : uint8_t { None, GetMessage, Local, FlipLocal };

/**
 * Successor selection after a step's register access completes.
 * Pure-local control flow (loop bounds, until tests, the bit-compare
 * branch) lives entirely here, so program counters range exactly over
 * register-access points.
 */
enum class SuccKind : uint8_t {
  Static,        // always next_main
  Until,         // all cmp_pairs equal -> next_main, else next_alt
  BranchUnequal  // cmp_pairs[0] unequal -> next_main, else next_alt
};

struct Step {
  StepAction action;
  RegSide reg_side;       // whose register (relative to the executor)
  RegisterKind reg_kind;
  int nb;                 // neighbor slot this access concerns
  int dest_local;         // flat local index for reads, -1 for writes
  WriteSource src = WriteSource::None;
  int src_local = -1;     // flat local index for Local/FlipLocal sources
  SuccKind succ = SuccKind::Static;
  uint32_t next_main = 0;
  uint32_t next_alt = 0;
  std::vector<std::pair<int, int>> cmp_pairs;  // flat local index pairs
  bool in_loop = false;
};

/**
 * A protocol listing compiled for one process degree: a flat list of
 * atomic steps, each performing exactly one register access.
 */
struct StepProgram {
  ProtocolKind kind;
  bool naive_pairing = false;
  int degree = 0;
  int slots_per_neighbor = 0;
  std::vector<LocalSlot> slots;      // slot meaning by position
  std::vector<ValueTag> slot_domain; // domain by position
  std::vector<Step> steps;

  size_t location_count() const { return steps.size(); }
  int local_count() const { return degree * slots_per_neighbor; }

  int local_index(int nb, LocalSlot s) const {
    for (int i = 0; i < slots_per_neighbor; ++i)
      if (slots[i] == s) return nb * slots_per_neighbor + i;
    throw UsageError("local slot not present under this protocol");
  }

  ValueTag local_domain(int flat) const {
    return slot_domain[flat % slots_per_neighbor];
  }

  bool pc_in_loop(uint32_t pc) const { return steps.at(pc).in_loop; }
};

namespace detail {

inline void set_slots(StepProgram& prog, std::vector<LocalSlot> slots) {
  prog.slots = std::move(slots);
  prog.slots_per_neighbor = static_cast<int>(prog.slots.size());
  prog.slot_domain.clear();
  for (LocalSlot s : prog.slots)
    prog.slot_domain.push_back(
        (s == LocalSlot::Recv || s == LocalSlot::SelfMsg ||
         s == LocalSlot::MsgAck)
            ? ValueTag::Message
            : ValueTag::Bit);
}

inline Step read_step(RegSide side, RegisterKind kind, int nb, int dest,
                      bool in_loop) {
  Step s;
  s.action = StepAction::Read;
  s.reg_side = side;
  s.reg_kind = kind;
  s.nb = nb;
  s.dest_local = dest;
  s.in_loop = in_loop;
  return s;
}

inline Step write_step(RegSide side, RegisterKind kind, int nb,
                       WriteSource src, int src_local, bool in_loop) {
  Step s;
  s.action = StepAction::Write;
  s.reg_side = side;
  s.reg_kind = kind;
  s.nb = nb;
  s.dest_local = -1;
  s.src = src;
  s.src_local = src_local;
  s.in_loop = in_loop;
  return s;
}

}  // namespace detail

/**
 * Compiles a protocol listing for a process with `degree` neighbors.
 *
 * Atomic-step inventory per neighbor:
 *   Basic2P / ReadChecking  write phase 1, loop body 4
 *   WeakRendezvous          write phase 3, loop body 5
 *   QuasiRendezvous         write phase 3, loop body 7 (4 executed when
 *                           the bit-compare branch is skipped)
 *
 * The until test runs as part of the successor of the last loop-body
 * step of a sweep, over the locals gathered in that sweep.
 */
inline StepProgram compile(ProtocolKind kind, int degree) {
  using detail::read_step;
  using detail::write_step;
  if (degree < 1) throw UsageError("degree must be >= 1");
  if (kind == ProtocolKind::Basic2P && degree != 1)
    throw UsageError("basic2p requires degree 1 (two-process system)");

  StepProgram prog;
  prog.kind = kind;
  prog.degree = degree;
  const int n = degree;

  if (kind == ProtocolKind::Basic2P || kind == ProtocolKind::ReadChecking) {
    detail::set_slots(
        prog, {LocalSlot::Recv, LocalSlot::SelfMsg, LocalSlot::MsgAck});
    const uint32_t loop_start = static_cast<uint32_t>(n);
    // write phase: write(Write_i, get_i) per neighbor
    for (int i = 0; i < n; ++i) {
      Step s = write_step(RegSide::Own, RegisterKind::Write, i,
                          WriteSource::GetMessage, -1, false);
      s.next_main = static_cast<uint32_t>(i + 1);
      prog.steps.push_back(s);
    }
    // repeat sweep: recv, echo, ack, re-read own message
    for (int i = 0; i < n; ++i) {
      int recv = prog.local_index(i, LocalSlot::Recv);
      int self_msg = prog.local_index(i, LocalSlot::SelfMsg);
      int ack = prog.local_index(i, LocalSlot::MsgAck);
      uint32_t base = loop_start + static_cast<uint32_t>(4 * i);

      Step s0 = read_step(RegSide::Peer, RegisterKind::Write, i, recv, true);
      s0.next_main = base + 1;
      Step s1 = write_step(RegSide::Own, RegisterKind::Read, i,
                           WriteSource::Local, recv, true);
      s1.next_main = base + 2;
      Step s2 = read_step(RegSide::Peer, RegisterKind::Read, i, ack, true);
      s2.next_main = base + 3;
      Step s3 =
          read_step(RegSide::Own, RegisterKind::Write, i, self_msg, true);
      if (i == n - 1) {
        s3.succ = SuccKind::Until;
        s3.next_main = 0;          // exit: restart write phase
        s3.next_alt = loop_start;  // stay in the repeat loop
        for (int j = 0; j < n; ++j)
          s3.cmp_pairs.emplace_back(prog.local_index(j, LocalSlot::MsgAck),
                                    prog.local_index(j, LocalSlot::SelfMsg));
      } else {
        s3.next_main = base + 4;
      }
      prog.steps.push_back(s0);
      prog.steps.push_back(s1);
      prog.steps.push_back(s2);
      prog.steps.push_back(s3);
    }
    return prog;
  }

  const bool quasi = (kind == ProtocolKind::QuasiRendezvous);
  if (quasi)
    detail::set_slots(prog,
                      {LocalSlot::Recv, LocalSlot::PeerBit, LocalSlot::SelfBit,
                       LocalSlot::BitAck, LocalSlot::BitEcho});
  else
    detail::set_slots(prog, {LocalSlot::Recv, LocalSlot::PeerBit,
                             LocalSlot::SelfBit, LocalSlot::BitAck});

  const uint32_t loop_start = static_cast<uint32_t>(3 * n);
  // write phase: message out, read a bit, write its complement into
  // the own Control register
  for (int i = 0; i < n; ++i) {
    int self_bit = prog.local_index(i, LocalSlot::SelfBit);
    uint32_t base = static_cast<uint32_t>(3 * i);
    Step s0 = write_step(RegSide::Own, RegisterKind::Write, i,
                         WriteSource::GetMessage, -1, false);
    s0.next_main = base + 1;
    Step s1 =
        read_step(RegSide::Own, RegisterKind::Control, i, self_bit, false);
    s1.next_main = base + 2;
    Step s2 = write_step(RegSide::Own, RegisterKind::Control, i,
                         WriteSource::FlipLocal, self_bit, false);
    s2.next_main = base + 3;
    prog.steps.push_back(s0);
    prog.steps.push_back(s1);
    prog.steps.push_back(s2);
  }

  const int body = quasi ? 7 : 5;
  for (int i = 0; i < n; ++i) {
    int recv = prog.local_index(i, LocalSlot::Recv);
    int peer_bit = prog.local_index(i, LocalSlot::PeerBit);
    int self_bit = prog.local_index(i, LocalSlot::SelfBit);
    int bit_ack = prog.local_index(i, LocalSlot::BitAck);
    uint32_t base = loop_start + static_cast<uint32_t>(body * i);
    uint32_t next_sweep = (i == n - 1) ? 0 : base + body;  // 0 unused there

    if (!quasi) {
      // read peer bit, recv message, echo peer bit, read own bit, read ack.
      // The bit is read before the message: an echo of a fresh bit then
      // implies the message behind it was read after the bit flipped,
      // which is what makes the at-least-one-read guarantee hold. With
      // the opposite order a sweep straddling the peer's write phase
      // acknowledges a value it never read.
      Step s0 =
          read_step(RegSide::Peer, RegisterKind::Control, i, peer_bit, true);
      s0.next_main = base + 1;
      Step s1 = read_step(RegSide::Peer, RegisterKind::Write, i, recv, true);
      s1.next_main = base + 2;
      Step s2 = write_step(RegSide::Own, RegisterKind::CheckControl, i,
                           WriteSource::Local, peer_bit, true);
      s2.next_main = base + 3;
      Step s3 =
          read_step(RegSide::Own, RegisterKind::Control, i, self_bit, true);
      s3.next_main = base + 4;
      Step s4 = read_step(RegSide::Peer, RegisterKind::CheckControl, i,
                          bit_ack, true);
      if (i == n - 1) {
        s4.succ = SuccKind::Until;
        s4.next_main = 0;
        s4.next_alt = loop_start;
        for (int j = 0; j < n; ++j)
          s4.cmp_pairs.emplace_back(prog.local_index(j, LocalSlot::SelfBit),
                                    prog.local_index(j, LocalSlot::BitAck));
      } else {
        s4.next_main = next_sweep;
      }
      prog.steps.push_back(s0);
      prog.steps.push_back(s1);
      prog.steps.push_back(s2);
      prog.steps.push_back(s3);
      prog.steps.push_back(s4);
    } else {
      int bit_echo = prog.local_index(i, LocalSlot::BitEcho);
      // read peer bit; read own echo; if they differ, recv the message,
      // re-read the peer bit and echo that fresh copy; read own bit;
      // read ack. Echoing the bit re-read after the message (rather
      // than the sweep-top copy) keeps any fair execution from
      // acknowledging values forever out of phase: a sweep-top bit can
      // be one flip stale, and with a one-bit sequence number a stale
      // acknowledgment is indistinguishable from the acknowledgment of
      // the phase after next.
      Step s0 =
          read_step(RegSide::Peer, RegisterKind::Control, i, peer_bit, true);
      s0.next_main = base + 1;
      Step s1 = read_step(RegSide::Own, RegisterKind::CheckControl, i,
                          bit_echo, true);
      s1.succ = SuccKind::BranchUnequal;
      s1.next_main = base + 2;  // bits differ: take the read+echo pair
      s1.next_alt = base + 5;   // bits equal: skip it
      s1.cmp_pairs.emplace_back(peer_bit, bit_echo);
      Step s2 = read_step(RegSide::Peer, RegisterKind::Write, i, recv, true);
      s2.next_main = base + 3;
      Step s2b =
          read_step(RegSide::Peer, RegisterKind::Control, i, peer_bit, true);
      s2b.next_main = base + 4;
      Step s3 = write_step(RegSide::Own, RegisterKind::CheckControl, i,
                           WriteSource::Local, peer_bit, true);
      s3.next_main = base + 5;
      Step s4 =
          read_step(RegSide::Own, RegisterKind::Control, i, self_bit, true);
      s4.next_main = base + 6;
      Step s5 = read_step(RegSide::Peer, RegisterKind::CheckControl, i,
                          bit_ack, true);
      if (i == n - 1) {
        s5.succ = SuccKind::Until;
        s5.next_main = 0;
        s5.next_alt = loop_start;
        for (int j = 0; j < n; ++j)
          s5.cmp_pairs.emplace_back(prog.local_index(j, LocalSlot::SelfBit),
                                    prog.local_index(j, LocalSlot::BitAck));
      } else {
        s5.next_main = next_sweep;
      }
      prog.steps.push_back(s0);
      prog.steps.push_back(s1);
      prog.steps.push_back(s2);
      prog.steps.push_back(s2b);
      prog.steps.push_back(s3);
      prog.steps.push_back(s4);
      prog.steps.push_back(s5);
    }
  }
  return prog;
}

/**
 * The per-link sequenced pairing: run the full single-link echo
 * protocol on each adjacent link to completion before moving to the
 * next link. This construction does not stabilize on cycles (a ring of
 * processes may each wait forever on the next); it exists so the
 * explorer can exhibit that failure.
 */
inline StepProgram compile_naive_pairing(int degree) {
  using detail::read_step;
  using detail::write_step;
  if (degree < 1) throw UsageError("degree must be >= 1");

  StepProgram prog;
  prog.kind = ProtocolKind::ReadChecking;
  prog.naive_pairing = true;
  prog.degree = degree;
  detail::set_slots(prog,
                    {LocalSlot::Recv, LocalSlot::SelfMsg, LocalSlot::MsgAck});

  for (int i = 0; i < degree; ++i) {
    int recv = prog.local_index(i, LocalSlot::Recv);
    int self_msg = prog.local_index(i, LocalSlot::SelfMsg);
    int ack = prog.local_index(i, LocalSlot::MsgAck);
    uint32_t base = static_cast<uint32_t>(5 * i);
    uint32_t next_link = static_cast<uint32_t>(5 * ((i + 1) % degree));

    Step w = write_step(RegSide::Own, RegisterKind::Write, i,
                        WriteSource::GetMessage, -1, false);
    w.next_main = base + 1;
    Step s0 = read_step(RegSide::Peer, RegisterKind::Write, i, recv, true);
    s0.next_main = base + 2;
    Step s1 = write_step(RegSide::Own, RegisterKind::Read, i,
                         WriteSource::Local, recv, true);
    s1.next_main = base + 3;
    Step s2 = read_step(RegSide::Peer, RegisterKind::Read, i, ack, true);
    s2.next_main = base + 4;
    Step s3 = read_step(RegSide::Own, RegisterKind::Write, i, self_msg, true);
    s3.succ = SuccKind::Until;
    s3.next_main = next_link;  // this link done, serve the next one
    s3.next_alt = base + 1;    // keep waiting on this link
    s3.cmp_pairs.emplace_back(ack, self_msg);
    prog.steps.push_back(w);
    prog.steps.push_back(s0);
    prog.steps.push_back(s1);
    prog.steps.push_back(s2);
    prog.steps.push_back(s3);
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Live-local analysis. A local is live at a location if some execution
// from that location uses its current value before overwriting it.
// The explorer canonicalizes dead locals away, which is behavior
// preserving and shrinks the enumerated space considerably.

/// live[pc] = bitmask over flat local indices live on entry to pc.
inline std::vector<uint64_t> live_locals(const StepProgram& prog) {
  const size_t n = prog.steps.size();
  if (prog.local_count() > 64)
    throw SizeError("live-local analysis supports at most 64 locals");
  std::vector<uint64_t> live(n, 0);

  auto uses_of = [&](const Step& s) -> uint64_t {
    uint64_t u = 0;
    if (s.action == StepAction::Write &&
        (s.src == WriteSource::Local || s.src == WriteSource::FlipLocal))
      u |= uint64_t{1} << s.src_local;
    return u;
  };
  auto cond_uses_of = [&](const Step& s) -> uint64_t {
    uint64_t u = 0;
    if (s.succ != SuccKind::Static)
      for (auto [a, b] : s.cmp_pairs)
        u |= (uint64_t{1} << a) | (uint64_t{1} << b);
    return u;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = n; i-- > 0;) {
      const Step& s = prog.steps[i];
      uint64_t out = live[s.next_main];
      if (s.succ != SuccKind::Static) out |= live[s.next_alt];
      uint64_t def = (s.dest_local >= 0)
                         ? (uint64_t{1} << s.dest_local)
                         : 0;
      // The successor condition evaluates after the access, so the
      // just-stored local need not be live on entry.
      uint64_t in = uses_of(s) | ((cond_uses_of(s) | out) & ~def);
      if (in != live[i]) {
        live[i] = in;
        changed = true;
      }
    }
  }
  return live;
}

}  // namespace selfstab

#endif  // SELFSTAB_PROGRAM_HPP_
