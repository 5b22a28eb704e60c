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

#ifndef SELFSTAB_MACHINE_HPP_
#define SELFSTAB_MACHINE_HPP_

#include <cstdint>
#include <utility>

#include "selfstab/config.hpp"
#include "selfstab/program.hpp"
#include "selfstab/registers.hpp"

namespace selfstab {

/// One executed atomic step, as recorded in traces.
struct Event {
  uint64_t step_index;
  int process;
  StepAction action;
  RegisterId reg;
  Value value;  // value read (Read) or written (Write)
  uint32_t pc_before;
  uint32_t pc_after;

  bool operator==(const Event&) const = default;
};

namespace detail {

inline int step_register_index(const System& sys, int p, const Step& s) {
  int q = sys.topology().neighbor_at(p, s.nb);
  if (s.reg_side == RegSide::Own)
    return sys.layout().index(p, s.nb, s.reg_kind);
  return sys.layout().index(q, sys.topology().neighbor_index(q, p),
                            s.reg_kind);
}

inline RegisterId step_register_id(const System& sys, int p, const Step& s) {
  int q = sys.topology().neighbor_at(p, s.nb);
  if (s.reg_side == RegSide::Own) return RegisterId{p, q, s.reg_kind};
  return RegisterId{q, p, s.reg_kind};
}

inline uint32_t successor(const Step& s, const std::vector<uint8_t>& locals) {
  switch (s.succ) {
    case SuccKind::Static:
      return s.next_main;
    case SuccKind::Until:
      for (auto [a, b] : s.cmp_pairs)
        if (locals[a] != locals[b]) return s.next_alt;
      return s.next_main;
    case SuccKind::BranchUnequal:
      return locals[s.cmp_pairs[0].first] != locals[s.cmp_pairs[0].second]
                 ? s.next_main
                 : s.next_alt;
  }
  return s.next_main;
}

}  // namespace detail

/**
 * Executes the single register access process p is poised at, updates
 * its locals and program counter, and reports the resulting event.
 * Every process is enabled in every configuration, so this never
 * blocks.
 */
inline Event apply_step(const System& sys, Configuration& cfg, int p,
                        uint64_t step_index = 0) {
  ProcessState& ps = cfg.procs.at(p);
  const StepProgram& prog = sys.program(p);
  const Step& s = prog.steps.at(ps.pc);
  const int reg = detail::step_register_index(sys, p, s);
  const ValueTag domain = register_domain(s.reg_kind);

  Event ev;
  ev.step_index = step_index;
  ev.process = p;
  ev.action = s.action;
  ev.reg = detail::step_register_id(sys, p, s);
  ev.pc_before = ps.pc;

  if (s.action == StepAction::Read) {
    uint8_t raw = cfg.regs[reg];
    ps.locals[s.dest_local] = raw;
    ev.value = Value{domain, raw};
  } else {
    uint8_t raw = 0;
    switch (s.src) {
      case WriteSource::GetMessage: {
        uint16_t& pos = cfg.cursors[sys.cursor_index(p, s.nb)];
        const Word& script = sys.script(p);
        raw = script[pos];
        pos = static_cast<uint16_t>((pos + 1) % script.size());
        break;
      }
      case WriteSource::Local:
        raw = ps.locals[s.src_local];
        break;
      case WriteSource::FlipLocal:
        raw = static_cast<uint8_t>((ps.locals[s.src_local] + 1) % 2);
        break;
      case WriteSource::None:
        break;
    }
    cfg.regs[reg] = raw;
    ev.value = Value{domain, raw};
  }

  ps.pc = detail::successor(s, ps.locals);
  ev.pc_after = ps.pc;
  return ev;
}

/// Pure form: returns the successor configuration and the event.
inline std::pair<Configuration, Event> execute_step(const System& sys,
                                                    Configuration cfg, int p) {
  Event ev = apply_step(sys, cfg, p);
  return {std::move(cfg), ev};
}

/**
 * Whether b currently permits a's next write toward it:
 * Read_ba = Write_ab for the echo protocols, CheckControl_ba =
 * Control_ab for the alternating-bit protocols.
 */
inline bool allows_write(const System& sys, const Configuration& cfg, int a,
                         int b) {
  const Topology& topo = sys.topology();
  int a_slot = topo.neighbor_index(a, b);  // validates the edge
  int b_slot = topo.neighbor_index(b, a);
  const RegisterLayout& lay = sys.layout();
  if (sys.uses_bits())
    return cfg.regs[lay.index(b, b_slot, RegisterKind::CheckControl)] ==
           cfg.regs[lay.index(a, a_slot, RegisterKind::Control)];
  return cfg.regs[lay.index(b, b_slot, RegisterKind::Read)] ==
         cfg.regs[lay.index(a, a_slot, RegisterKind::Write)];
}

/// True iff p's program counter lies inside the repeat loop.
inline bool is_loop_resident(const System& sys, const Configuration& cfg,
                             int p) {
  return sys.program(p).pc_in_loop(cfg.procs.at(p).pc);
}

}  // namespace selfstab

#endif  // SELFSTAB_MACHINE_HPP_
