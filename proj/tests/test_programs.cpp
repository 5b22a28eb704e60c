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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "selfstab/config.hpp"
#include "selfstab/machine.hpp"
#include "selfstab/program.hpp"

using namespace selfstab;

namespace {

System pair_system(ProtocolKind kind, const std::string& sigma = "abc",
                   const std::string& script = "abc") {
  Alphabet a(sigma);
  Word w = word_from_string(a, script);
  return System::make(kind, make_line(2), a, {w, w});
}

struct Access {
  StepAction action;
  RegisterId reg;
  char value;
  uint32_t pc_before;
  uint32_t pc_after;
};

}  // namespace

TEST_CASE("echo program for degree 1 has 5 locations") {
  StepProgram prog = compile(ProtocolKind::ReadChecking, 1);
  CHECK(prog.location_count() == 5);
  CHECK_FALSE(prog.pc_in_loop(0));
  for (uint32_t pc = 1; pc < 5; ++pc) CHECK(prog.pc_in_loop(pc));
}

TEST_CASE("echo program for degree N has N + 4N locations") {
  for (int deg : {1, 2, 3, 5}) {
    StepProgram prog = compile(ProtocolKind::ReadChecking, deg);
    CHECK(prog.location_count() == static_cast<size_t>(5 * deg));
    int write_phase = 0;
    for (const Step& s : prog.steps)
      if (!s.in_loop) ++write_phase;
    CHECK(write_phase == deg);
  }
}

TEST_CASE("quasi-rendezvous program for degree 2 splits 6 + 14") {
  StepProgram prog = compile(ProtocolKind::QuasiRendezvous, 2);
  CHECK(prog.location_count() == 20);
  for (uint32_t pc = 0; pc < 6; ++pc) CHECK_FALSE(prog.pc_in_loop(pc));
  for (uint32_t pc = 6; pc < 20; ++pc) CHECK(prog.pc_in_loop(pc));
}

TEST_CASE("weak-rendezvous degree-3 sweep is 15 accesses") {
  // 5 loop-body steps per neighbor, 3 neighbors.
  StepProgram prog = compile(ProtocolKind::WeakRendezvous, 3);
  int loop_steps = 0;
  for (const Step& s : prog.steps)
    if (s.in_loop) ++loop_steps;
  CHECK(loop_steps == 15);
  CHECK(prog.location_count() == 24);
}

TEST_CASE("basic2p only compiles for degree 1") {
  CHECK(compile(ProtocolKind::Basic2P, 1).location_count() == 5);
  CHECK_THROWS_AS(compile(ProtocolKind::Basic2P, 2), UsageError);
}

TEST_CASE("every step performs exactly one register access") {
  for (ProtocolKind kind :
       {ProtocolKind::ReadChecking, ProtocolKind::WeakRendezvous,
        ProtocolKind::QuasiRendezvous}) {
    StepProgram prog = compile(kind, 2);
    for (const Step& s : prog.steps) {
      if (s.action == StepAction::Read) {
        CHECK(s.dest_local >= 0);
        CHECK(s.src == WriteSource::None);
      } else {
        CHECK(s.dest_local == -1);
        CHECK(s.src != WriteSource::None);
      }
    }
  }
}

TEST_CASE("successors stay within the program") {
  for (int deg : {1, 2, 3}) {
    for (const StepProgram& prog :
         {compile(ProtocolKind::ReadChecking, deg),
          compile(ProtocolKind::WeakRendezvous, deg),
          compile(ProtocolKind::QuasiRendezvous, deg),
          compile_naive_pairing(deg)}) {
      for (const Step& s : prog.steps) {
        CHECK(s.next_main < prog.location_count());
        if (s.succ != SuccKind::Static)
          CHECK(s.next_alt < prog.location_count());
      }
    }
  }
}

TEST_CASE("clean echo replay reproduces the listing access sequence") {
  // Process 0 stepping alone from the canonical start, script "ab".
  // Hand-derived sequence: write phase, one satisfied sweep (all
  // registers equal), a fresh write, then a sweep that must repeat
  // because the peer never echoed the new value.
  System sys = pair_system(ProtocolKind::ReadChecking, "ab", "ab");
  Configuration cfg = canonical_initial(sys);
  const std::vector<Access> expected = {
      {StepAction::Write, {0, 1, RegisterKind::Write}, 'a', 0, 1},
      {StepAction::Read, {1, 0, RegisterKind::Write}, 'a', 1, 2},
      {StepAction::Write, {0, 1, RegisterKind::Read}, 'a', 2, 3},
      {StepAction::Read, {1, 0, RegisterKind::Read}, 'a', 3, 4},
      {StepAction::Read, {0, 1, RegisterKind::Write}, 'a', 4, 0},  // exit
      {StepAction::Write, {0, 1, RegisterKind::Write}, 'b', 0, 1},
      {StepAction::Read, {1, 0, RegisterKind::Write}, 'a', 1, 2},
      {StepAction::Write, {0, 1, RegisterKind::Read}, 'a', 2, 3},
      {StepAction::Read, {1, 0, RegisterKind::Read}, 'a', 3, 4},
      {StepAction::Read, {0, 1, RegisterKind::Write}, 'b', 4, 1},  // repeat
  };
  for (size_t i = 0; i < expected.size(); ++i) {
    Event ev = apply_step(sys, cfg, 0, i);
    CAPTURE(i);
    CHECK(ev.action == expected[i].action);
    CHECK(ev.reg == expected[i].reg);
    CHECK(ev.value.raw == sys.alphabet().index_of(expected[i].value));
    CHECK(ev.pc_before == expected[i].pc_before);
    CHECK(ev.pc_after == expected[i].pc_after);
  }
}

TEST_CASE("reading the peer echo register stores it and changes nothing") {
  System sys = pair_system(ProtocolKind::ReadChecking);
  Configuration cfg = canonical_initial(sys);
  cfg = write_register(sys, cfg, {1, 0, RegisterKind::Read},
                       Value::message(0));
  cfg.procs[0].pc = 3;  // poised at the ack read
  Configuration before = cfg;
  Event ev = apply_step(sys, cfg, 0);
  CHECK(ev.action == StepAction::Read);
  CHECK(ev.value == Value::message(0));
  CHECK(cfg.regs == before.regs);
  CHECK(cfg.procs[0].locals[sys.program(0).local_index(
            0, LocalSlot::MsgAck)] == 0);
}

TEST_CASE("control writes flip the bit just read") {
  System sys = pair_system(ProtocolKind::WeakRendezvous);
  Configuration cfg = canonical_initial(sys);
  cfg = write_register(sys, cfg, {0, 1, RegisterKind::Control}, Value::bit(1));
  cfg.procs[0].pc = 1;  // poised at the own-bit read of the write phase
  apply_step(sys, cfg, 0);
  Event flip = apply_step(sys, cfg, 0);
  CHECK(flip.action == StepAction::Write);
  CHECK(flip.reg == RegisterId{0, 1, RegisterKind::Control});
  CHECK(flip.value == Value::bit(0));
}

TEST_CASE("equal bits skip the quasi-rendezvous read branch") {
  System sys = pair_system(ProtocolKind::QuasiRendezvous);
  Configuration cfg = canonical_initial(sys);
  // loop starts at location 3 for degree 1; all registers are 0, so
  // the peer bit equals the stored echo and the branch is skipped
  cfg.procs[0].pc = 3;
  Event b_read = apply_step(sys, cfg, 0);
  CHECK(b_read.reg == RegisterId{1, 0, RegisterKind::Control});
  Event d_read = apply_step(sys, cfg, 0);
  CHECK(d_read.reg == RegisterId{0, 1, RegisterKind::CheckControl});
  CHECK(d_read.pc_after == 8);  // skipped the read-and-echo block

  // now with a pending peer bit the branch is taken
  cfg = write_register(sys, cfg, {1, 0, RegisterKind::Control}, Value::bit(1));
  cfg.procs[0].pc = 3;
  apply_step(sys, cfg, 0);
  Event d2 = apply_step(sys, cfg, 0);
  CHECK(d2.pc_after == 5);  // message read comes next
  Event recv = apply_step(sys, cfg, 0);
  CHECK(recv.reg == RegisterId{1, 0, RegisterKind::Write});
  Event recheck = apply_step(sys, cfg, 0);
  CHECK(recheck.reg == RegisterId{1, 0, RegisterKind::Control});
  Event echo = apply_step(sys, cfg, 0);
  CHECK(echo.reg == RegisterId{0, 1, RegisterKind::CheckControl});
  CHECK(echo.value == Value::bit(1));
}

TEST_CASE("get consumes the source cursor cyclically") {
  System sys = pair_system(ProtocolKind::ReadChecking, "abc", "ab");
  Configuration cfg = canonical_initial(sys);
  std::string written;
  for (int i = 0; i < 5; ++i) {
    Event ev = apply_step(sys, cfg, 0);  // write phase
    written.push_back(sys.alphabet().symbol(ev.value.raw));
    cfg.procs[0].pc = 0;  // jump back to the write phase
  }
  CHECK(written == "ababa");
}

TEST_CASE("allows_write follows the permission registers") {
  SUBCASE("echo protocols compare Read_ba with Write_ab") {
    System sys = pair_system(ProtocolKind::ReadChecking);
    Configuration cfg = canonical_initial(sys);
    cfg = write_register(sys, cfg, {0, 1, RegisterKind::Write},
                         Value::message(2));
    CHECK_FALSE(allows_write(sys, cfg, 0, 1));
    cfg = write_register(sys, cfg, {1, 0, RegisterKind::Read},
                         Value::message(2));
    CHECK(allows_write(sys, cfg, 0, 1));
  }
  SUBCASE("bit protocols compare CheckControl_ba with Control_ab") {
    System sys = pair_system(ProtocolKind::QuasiRendezvous);
    Configuration cfg = canonical_initial(sys);
    cfg = write_register(sys, cfg, {0, 1, RegisterKind::Control},
                         Value::bit(1));
    CHECK_FALSE(allows_write(sys, cfg, 0, 1));  // CheckControl_10 = 0
  }
  SUBCASE("non-edges are usage errors") {
    System sys = System::make(
        ProtocolKind::ReadChecking, make_ring(4), Alphabet("ab"),
        std::vector<Word>(4, word_from_string(Alphabet("ab"), "a")));
    Configuration cfg = canonical_initial(sys);
    CHECK_THROWS_AS(allows_write(sys, cfg, 0, 2), UsageError);
  }
}

TEST_CASE("a complete writing revokes permission until the full reading") {
  // Hand simulation from the clean start: the writer's three-step
  // write phase flips its Control bit, revoking permission; the
  // reader's write phase does not restore it; the reader's full
  // reading does, at its echo write.
  System sys = pair_system(ProtocolKind::QuasiRendezvous);
  Configuration cfg = canonical_initial(sys);
  CHECK(allows_write(sys, cfg, 0, 1));
  for (int i = 0; i < 3; ++i) apply_step(sys, cfg, 0);
  CHECK_FALSE(allows_write(sys, cfg, 0, 1));
  for (int i = 0; i < 3; ++i) apply_step(sys, cfg, 1);  // reader write phase
  CHECK_FALSE(allows_write(sys, cfg, 0, 1));
  for (int i = 0; i < 4; ++i) apply_step(sys, cfg, 1);  // bit, echo, recv, bit
  CHECK_FALSE(allows_write(sys, cfg, 0, 1));
  apply_step(sys, cfg, 1);  // the echo write completes the full reading
  CHECK(allows_write(sys, cfg, 0, 1));
}

TEST_CASE("is_loop_resident matches the compiled loop region") {
  System sys = pair_system(ProtocolKind::ReadChecking);
  Configuration cfg = canonical_initial(sys);
  CHECK_FALSE(is_loop_resident(sys, cfg, 0));
  cfg.procs[0].pc = 4;  // the until evaluation point
  CHECK(is_loop_resident(sys, cfg, 0));
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Configuration c = random_configuration(sys, seed);
    CHECK(is_loop_resident(sys, c, 0) == (c.procs[0].pc >= 1));
  }
}

TEST_CASE("naive pairing serves links strictly in sequence") {
  StepProgram prog = compile_naive_pairing(2);
  CHECK(prog.location_count() == 10);
  // each link's until either advances to the next link or repeats its
  // own loop, never re-enters another link's loop
  const Step& until0 = prog.steps[4];
  CHECK(until0.succ == SuccKind::Until);
  CHECK(until0.next_main == 5);
  CHECK(until0.next_alt == 1);
  const Step& until1 = prog.steps[9];
  CHECK(until1.next_main == 0);
  CHECK(until1.next_alt == 6);
}

TEST_CASE("live-local analysis matches the hand-derived sets") {
  SUBCASE("echo, degree 1") {
    StepProgram prog = compile(ProtocolKind::ReadChecking, 1);
    std::vector<uint64_t> live = live_locals(prog);
    int recv = prog.local_index(0, LocalSlot::Recv);
    int ack = prog.local_index(0, LocalSlot::MsgAck);
    CHECK(live == std::vector<uint64_t>{0, 0, uint64_t{1} << recv, 0,
                                        uint64_t{1} << ack});
  }
  SUBCASE("quasi-rendezvous, degree 1") {
    StepProgram prog = compile(ProtocolKind::QuasiRendezvous, 1);
    std::vector<uint64_t> live = live_locals(prog);
    uint64_t peer_bit = uint64_t{1} << prog.local_index(0, LocalSlot::PeerBit);
    uint64_t self_bit = uint64_t{1} << prog.local_index(0, LocalSlot::SelfBit);
    // the in-branch re-read redefines the peer bit, so the sweep-top
    // copy dies right after the branch decision
    CHECK(live == std::vector<uint64_t>{0, 0, self_bit, 0, peer_bit, 0, 0,
                                        peer_bit, 0, self_bit});
  }
}

TEST_CASE("dead locals never influence behavior") {
  // Zeroing every dead-by-analysis local must leave the produced event
  // stream untouched: the reduction the explorer relies on.
  for (ProtocolKind kind :
       {ProtocolKind::ReadChecking, ProtocolKind::WeakRendezvous,
        ProtocolKind::QuasiRendezvous}) {
    Alphabet sigma("ab");
    std::vector<Word> scripts(3, word_from_string(sigma, "ab"));
    System sys = System::make(kind, make_ring(3), sigma, scripts);
    std::vector<std::vector<uint64_t>> live;
    for (int p = 0; p < 3; ++p) live.push_back(live_locals(sys.program(p)));
    for (uint64_t seed = 0; seed < 30; ++seed) {
      Configuration a = random_configuration(sys, seed);
      Configuration b = a;
      for (int p = 0; p < 3; ++p)
        for (int l = 0; l < sys.program(p).local_count(); ++l)
          if (!(live[p][b.procs[p].pc] >> l & 1)) b.procs[p].locals[l] = 0;
      Rng sched(seed * 31 + 7);
      for (int i = 0; i < 400; ++i) {
        int p = static_cast<int>(sched.below(3));
        Event ea = apply_step(sys, a, p, i);
        Event eb = apply_step(sys, b, p, i);
        CHECK(ea == eb);
        // re-kill dead locals so the comparison stays canonical
        for (int l = 0; l < sys.program(p).local_count(); ++l)
          if (!(live[p][b.procs[p].pc] >> l & 1)) b.procs[p].locals[l] = 0;
      }
      CHECK(a.regs == b.regs);
      CHECK(a.cursors == b.cursors);
    }
  }
}
