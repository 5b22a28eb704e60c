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

#ifndef SELFSTAB_CONFIG_HPP_
#define SELFSTAB_CONFIG_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "selfstab/program.hpp"
#include "selfstab/registers.hpp"
#include "selfstab/rng.hpp"
#include "selfstab/topology.hpp"
#include "selfstab/value.hpp"

namespace selfstab {

/**
 * One experiment instance: protocol, network, alphabet, per-process
 * source scripts and the compiled step programs. Immutable once built;
 * configurations reference it but do not own it.
 */
class System {
 public:
  static System make(ProtocolKind kind, Topology topo, Alphabet sigma,
                     std::vector<Word> scripts) {
    return System(kind, false, std::move(topo), std::move(sigma),
                  std::move(scripts));
  }

  /// Same instance shape as the echo protocol, but with the per-link
  /// sequenced pairing program (a known non-stabilizing construction).
  static System make_naive_pairing(Topology topo, Alphabet sigma,
                                   std::vector<Word> scripts) {
    return System(ProtocolKind::ReadChecking, true, std::move(topo),
                  std::move(sigma), std::move(scripts));
  }

  ProtocolKind kind() const { return kind_; }
  bool naive_pairing() const { return naive_; }
  const Topology& topology() const { return topo_; }
  const Alphabet& alphabet() const { return sigma_; }
  const RegisterLayout& layout() const { return layout_; }
  int process_count() const { return topo_.process_count(); }

  const StepProgram& program(int p) const {
    return *programs_[program_of_[p]];
  }
  const Word& script(int p) const { return scripts_.at(p); }
  const std::vector<Word>& scripts() const { return scripts_; }

  /// Flat index of the (process, neighbor slot) source cursor.
  int cursor_index(int p, int nb) const { return cursor_base_[p] + nb; }
  int cursor_count() const { return cursor_count_; }

  /// Whether the alternating-bit register pair exists on links.
  bool uses_bits() const {
    return kind_ == ProtocolKind::WeakRendezvous ||
           kind_ == ProtocolKind::QuasiRendezvous;
  }

 private:
  System(ProtocolKind kind, bool naive, Topology topo, Alphabet sigma,
         std::vector<Word> scripts)
      : kind_(kind),
        naive_(naive),
        topo_(std::move(topo)),
        sigma_(std::move(sigma)),
        scripts_(std::move(scripts)),
        layout_(topo_, kind) {
    if (kind_ == ProtocolKind::Basic2P && topo_.process_count() != 2)
      throw UsageError("basic2p requires exactly 2 processes");
    if (static_cast<int>(scripts_.size()) != topo_.process_count())
      throw UsageError("need one source script per process");
    for (const Word& w : scripts_) {
      if (w.empty()) throw UsageError("source script must be nonempty");
      if (w.size() > 0xFFFF) throw UsageError("source script too long");
      for (uint8_t v : w)
        if (v >= sigma_.size())
          throw UsageError("script symbol outside alphabet");
    }
    const int n = topo_.process_count();
    program_of_.resize(n);
    cursor_base_.resize(n);
    int cursors = 0;
    for (int p = 0; p < n; ++p) {
      cursor_base_[p] = cursors;
      cursors += topo_.degree(p);
      int found = -1;
      for (size_t i = 0; i < programs_.size(); ++i)
        if (programs_[i]->degree == topo_.degree(p))
          found = static_cast<int>(i);
      if (found < 0) {
        programs_.push_back(std::make_shared<const StepProgram>(
            naive_ ? compile_naive_pairing(topo_.degree(p))
                   : compile(kind_, topo_.degree(p))));
        found = static_cast<int>(programs_.size()) - 1;
      }
      program_of_[p] = found;
    }
    cursor_count_ = cursors;
  }

  ProtocolKind kind_;
  bool naive_;
  Topology topo_;
  Alphabet sigma_;
  std::vector<Word> scripts_;
  RegisterLayout layout_;
  std::vector<std::shared_ptr<const StepProgram>> programs_;
  std::vector<int> program_of_;
  std::vector<int> cursor_base_;
  int cursor_count_ = 0;
};

struct ProcessState {
  uint32_t pc = 0;
  std::vector<uint8_t> locals;  // flat: neighbor slot * slots_per_neighbor

  bool operator==(const ProcessState&) const = default;
};

/**
 * Complete system snapshot: every register value, every process state
 * and every source-cursor position. A plain value; all operations on
 * it are pure.
 */
struct Configuration {
  std::vector<uint8_t> regs;        // by RegisterLayout index
  std::vector<ProcessState> procs;  // by process id
  std::vector<uint16_t> cursors;    // by System::cursor_index

  bool operator==(const Configuration&) const = default;
};

// ---------------------------------------------------------------------------
// Register access.

inline Value read_register(const System& sys, const Configuration& cfg,
                           const RegisterId& reg) {
  int flat = sys.layout().index_of(sys.topology(), reg);
  uint8_t raw = cfg.regs.at(flat);
  return (register_domain(reg.kind) == ValueTag::Message) ? Value::message(raw)
                                                          : Value::bit(raw);
}

inline void write_register_inplace(const System& sys, Configuration& cfg,
                                   const RegisterId& reg, Value v) {
  if (v.tag != register_domain(reg.kind))
    throw UsageError(std::string("value domain does not match register kind ") +
                     register_kind_name(reg.kind));
  if (v.tag == ValueTag::Message && v.raw >= sys.alphabet().size())
    throw UsageError("message symbol outside alphabet");
  int flat = sys.layout().index_of(sys.topology(), reg);
  cfg.regs.at(flat) = v.raw;
}

inline Configuration write_register(const System& sys, Configuration cfg,
                                    const RegisterId& reg, Value v) {
  write_register_inplace(sys, cfg, reg, v);
  return cfg;
}

// ---------------------------------------------------------------------------
// Configuration construction.

/// All registers and locals zeroed (first alphabet symbol / bit 0),
/// every pc at its first write-phase step, cursors at 0.
inline Configuration canonical_initial(const System& sys) {
  Configuration cfg;
  cfg.regs.assign(sys.layout().count(), 0);
  cfg.procs.resize(sys.process_count());
  for (int p = 0; p < sys.process_count(); ++p) {
    cfg.procs[p].pc = 0;
    cfg.procs[p].locals.assign(sys.program(p).local_count(), 0);
  }
  cfg.cursors.assign(sys.cursor_count(), 0);
  return cfg;
}

namespace detail {

inline uint64_t domain_size(const System& sys, ValueTag tag) {
  return tag == ValueTag::Message ? sys.alphabet().size() : 2;
}

// Re-randomizes each register value, local and program counter with
// probability `fraction`. Source cursors are environment state and are
// never touched. One routine backs both corruption and fully random
// configurations so that fraction = 1 reproduces the latter exactly.
inline void resample(const System& sys, Configuration& cfg, double fraction,
                     Rng& rng) {
  auto hit = [&]() { return rng.unit() < fraction; };
  for (int r = 0; r < sys.layout().count(); ++r)
    if (hit())
      cfg.regs[r] = static_cast<uint8_t>(
          rng.below(domain_size(sys, sys.layout().domain_at(r))));
  for (int p = 0; p < sys.process_count(); ++p) {
    const StepProgram& prog = sys.program(p);
    if (hit())
      cfg.procs[p].pc =
          static_cast<uint32_t>(rng.below(prog.location_count()));
    for (int l = 0; l < prog.local_count(); ++l)
      if (hit())
        cfg.procs[p].locals[l] = static_cast<uint8_t>(
            rng.below(domain_size(sys, prog.local_domain(l))));
  }
}

}  // namespace detail

/// Every register, local and pc drawn uniformly from its legal domain;
/// cursors at 0. Deterministic in the seed.
inline Configuration random_configuration(const System& sys, uint64_t seed) {
  Configuration cfg = canonical_initial(sys);
  Rng rng(Rng::derive(seed, 0xc0'7f'16));
  detail::resample(sys, cfg, 1.0, rng);
  return cfg;
}

/// Independently re-randomizes each state item with probability
/// `fraction`. fraction = 1 coincides with random_configuration on the
/// same seed; fraction = 0 is the identity.
inline Configuration corrupt(const System& sys, Configuration cfg,
                             double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw UsageError("corruption fraction outside [0,1]");
  Rng rng(Rng::derive(seed, 0xc0'7f'16));
  detail::resample(sys, cfg, fraction, rng);
  return cfg;
}

/// View of one source stream's scripted word and cyclic position.
struct SourceCursor {
  const Word* script;
  uint16_t position;
};

inline SourceCursor source_cursor(const System& sys, const Configuration& cfg,
                                  int p, int nb) {
  return SourceCursor{&sys.script(p), cfg.cursors.at(sys.cursor_index(p, nb))};
}

}  // namespace selfstab

#endif  // SELFSTAB_CONFIG_HPP_
