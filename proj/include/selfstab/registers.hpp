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

#ifndef SELFSTAB_REGISTERS_HPP_
#define SELFSTAB_REGISTERS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selfstab/topology.hpp"
#include "selfstab/value.hpp"

namespace selfstab {

enum class ProtocolKind : uint8_t {
  Basic2P,         // two-process echo protocol (single-link instance)
  ReadChecking,    // message echoed through Read registers
  WeakRendezvous,  // alternating bit, at-least-one read per write
  QuasiRendezvous  // alternating bit, exactly-one read per write
};

inline std::string protocol_name(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Basic2P: return "basic2p";
    case ProtocolKind::ReadChecking: return "read-checking";
    case ProtocolKind::WeakRendezvous: return "weak-rendezvous";
    case ProtocolKind::QuasiRendezvous: return "quasi-rendezvous";
  }
  return "?";
}

inline ProtocolKind protocol_from_name(const std::string& s) {
  if (s == "basic2p") return ProtocolKind::Basic2P;
  if (s == "read-checking") return ProtocolKind::ReadChecking;
  if (s == "weak-rendezvous") return ProtocolKind::WeakRendezvous;
  if (s == "quasi-rendezvous") return ProtocolKind::QuasiRendezvous;
  throw UsageError("unknown protocol '" + s + "'");
}

/**
 * Register kinds on one link direction. The owner writes, both
 * endpoints may read.
 *
 *   Write        owner's outgoing message
 *   Read         owner's echo of the peer's last message (echo family)
 *   Control      owner's alternating bit, flipped after each write
 *   CheckControl owner's echo of the peer's alternating bit
 */
enum class RegisterKind : uint8_t { Write, Read, Control, CheckControl };

inline const char* register_kind_name(RegisterKind k) {
  switch (k) {
    case RegisterKind::Write: return "Write";
    case RegisterKind::Read: return "Read";
    case RegisterKind::Control: return "Control";
    case RegisterKind::CheckControl: return "CheckControl";
  }
  return "?";
}

inline RegisterKind register_kind_from_name(const std::string& s) {
  if (s == "Write") return RegisterKind::Write;
  if (s == "Read") return RegisterKind::Read;
  if (s == "Control") return RegisterKind::Control;
  if (s == "CheckControl") return RegisterKind::CheckControl;
  throw UsageError("unknown register kind '" + s + "'");
}

inline ValueTag register_domain(RegisterKind k) {
  return (k == RegisterKind::Write || k == RegisterKind::Read)
             ? ValueTag::Message
             : ValueTag::Bit;
}

/// Which register kinds exist per link direction under each protocol.
inline std::span<const RegisterKind> kinds_per_direction(ProtocolKind k) {
  static constexpr std::array<RegisterKind, 2> echo{RegisterKind::Write,
                                                    RegisterKind::Read};
  static constexpr std::array<RegisterKind, 3> bit{RegisterKind::Write,
                                                   RegisterKind::Control,
                                                   RegisterKind::CheckControl};
  switch (k) {
    case ProtocolKind::Basic2P:
    case ProtocolKind::ReadChecking: return echo;
    default: return bit;
  }
}

struct RegisterId {
  int owner;
  int peer;
  RegisterKind kind;

  bool operator==(const RegisterId&) const = default;
};

/**
 * Flat indexing of every register of an instance. Layout: for each
 * process in id order, for each of its neighbor slots in list order,
 * the direction's kinds in kinds_per_direction order.
 */
class RegisterLayout {
 public:
  RegisterLayout() = default;

  RegisterLayout(const Topology& topo, ProtocolKind kind) {
    auto kinds = kinds_per_direction(kind);
    kinds_.assign(kinds.begin(), kinds.end());
    base_.resize(topo.process_count());
    int next = 0;
    for (int p = 0; p < topo.process_count(); ++p) {
      base_[p] = next;
      next += topo.degree(p) * static_cast<int>(kinds_.size());
    }
    count_ = next;
    ids_.reserve(count_);
    for (int p = 0; p < topo.process_count(); ++p)
      for (int q : topo.neighbors(p))
        for (RegisterKind k : kinds_) ids_.push_back(RegisterId{p, q, k});
  }

  int count() const { return count_; }
  std::span<const RegisterKind> kinds() const { return kinds_; }

  int index(int owner, int neighbor_slot, RegisterKind k) const {
    int ki = kind_pos(k);
    return base_.at(owner) +
           neighbor_slot * static_cast<int>(kinds_.size()) + ki;
  }

  int index_of(const Topology& topo, const RegisterId& id) const {
    return index(id.owner, topo.neighbor_index(id.owner, id.peer), id.kind);
  }

  const RegisterId& id_at(int flat) const { return ids_.at(flat); }

  ValueTag domain_at(int flat) const {
    return register_domain(ids_.at(flat).kind);
  }

  bool operator==(const RegisterLayout&) const = default;

 private:
  int kind_pos(RegisterKind k) const {
    for (size_t i = 0; i < kinds_.size(); ++i)
      if (kinds_[i] == k) return static_cast<int>(i);
    throw UsageError(std::string("register kind ") + register_kind_name(k) +
                     " does not exist under this protocol");
  }

  std::vector<RegisterKind> kinds_;
  std::vector<int> base_;
  std::vector<RegisterId> ids_;
  int count_ = 0;
};

}  // namespace selfstab

#endif  // SELFSTAB_REGISTERS_HPP_
