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

#ifndef SELFSTAB_EXPLORER_HPP_
#define SELFSTAB_EXPLORER_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfstab/config.hpp"
#include "selfstab/machine.hpp"
#include "selfstab/program.hpp"

namespace selfstab {

/**
 * Canonical enumeration of the entire configuration space of a small
 * instance. Node identity covers every register, every program
 * counter, every live local and every source-cursor position; locals
 * that are dead at their process's current location are canonicalized
 * away (they cannot influence any future step, so the quotient is
 * behavior preserving and much smaller).
 */
class StateSpace {
 public:
  explicit StateSpace(const System& sys) : sys_(&sys) {
    const int n = sys.process_count();
    for (int p = 0; p < n; ++p) {
      const StepProgram& prog = sys.program(p);
      ProcTable table;
      table.live = live_locals(prog);
      table.offset.resize(prog.location_count() + 1);
      uint64_t total = 0;
      for (size_t pc = 0; pc < prog.location_count(); ++pc) {
        table.offset[pc] = total;
        uint64_t width = 1;
        for (int l = 0; l < prog.local_count(); ++l)
          if (table.live[pc] >> l & 1) width = mul(width, local_dom(prog, l));
        total = add(total, width);
      }
      table.offset[prog.location_count()] = total;
      table.size = total;
      procs_.push_back(std::move(table));
    }
    count_ = 1;
    for (int r = 0; r < sys.layout().count(); ++r)
      count_ = mul(count_, reg_dom(r));
    for (int p = 0; p < n; ++p) count_ = mul(count_, procs_[p].size);
    for (int p = 0; p < n; ++p)
      for (int nb = 0; nb < sys.topology().degree(p); ++nb)
        count_ = mul(count_, sys.script(p).size());
  }

  const System& system() const { return *sys_; }
  uint64_t count() const { return count_; }

  uint64_t encode(const Configuration& cfg) const {
    const System& sys = *sys_;
    uint64_t id = 0;
    for (int r = 0; r < sys.layout().count(); ++r)
      id = id * reg_dom(r) + cfg.regs[r];
    for (int p = 0; p < sys.process_count(); ++p) {
      const StepProgram& prog = sys.program(p);
      const ProcTable& table = procs_[p];
      uint32_t pc = cfg.procs[p].pc;
      uint64_t local_code = 0;
      uint64_t radix = 1;
      for (int l = 0; l < prog.local_count(); ++l)
        if (table.live[pc] >> l & 1) {
          local_code += cfg.procs[p].locals[l] * radix;
          radix *= local_dom(prog, l);
        }
      id = id * table.size + table.offset[pc] + local_code;
    }
    for (int p = 0; p < sys.process_count(); ++p)
      for (int nb = 0; nb < sys.topology().degree(p); ++nb)
        id = id * sys.script(p).size() + cfg.cursors[sys.cursor_index(p, nb)];
    return id;
  }

  /// Inverse of encode; dead locals come back as 0.
  void decode(uint64_t id, Configuration& cfg) const {
    const System& sys = *sys_;
    for (int p = sys.process_count() - 1; p >= 0; --p)
      for (int nb = sys.topology().degree(p) - 1; nb >= 0; --nb) {
        uint64_t dom = sys.script(p).size();
        cfg.cursors[sys.cursor_index(p, nb)] = static_cast<uint16_t>(id % dom);
        id /= dom;
      }
    for (int p = sys.process_count() - 1; p >= 0; --p) {
      const StepProgram& prog = sys.program(p);
      const ProcTable& table = procs_[p];
      uint64_t code = id % table.size;
      id /= table.size;
      uint32_t pc = 0;
      while (table.offset[pc + 1] <= code) ++pc;
      cfg.procs[p].pc = pc;
      uint64_t local_code = code - table.offset[pc];
      std::fill(cfg.procs[p].locals.begin(), cfg.procs[p].locals.end(), 0);
      for (int l = 0; l < prog.local_count(); ++l)
        if (table.live[pc] >> l & 1) {
          uint64_t dom = local_dom(prog, l);
          cfg.procs[p].locals[l] = static_cast<uint8_t>(local_code % dom);
          local_code /= dom;
        }
    }
    for (int r = sys.layout().count() - 1; r >= 0; --r) {
      uint64_t dom = reg_dom(r);
      cfg.regs[r] = static_cast<uint8_t>(id % dom);
      id /= dom;
    }
  }

  Configuration decode(uint64_t id) const {
    Configuration cfg = canonical_initial(*sys_);
    decode(id, cfg);
    return cfg;
  }

 private:
  struct ProcTable {
    std::vector<uint64_t> live;
    std::vector<uint64_t> offset;
    uint64_t size = 0;
  };

  uint64_t reg_dom(int r) const {
    return sys_->layout().domain_at(r) == ValueTag::Message
               ? sys_->alphabet().size()
               : 2;
  }
  uint64_t local_dom(const StepProgram& prog, int l) const {
    return prog.local_domain(l) == ValueTag::Message ? sys_->alphabet().size()
                                                     : 2;
  }

  static uint64_t add(uint64_t a, uint64_t b) {
    if (a > ~uint64_t{0} - b) throw SizeError("state space overflows");
    return a + b;
  }
  static uint64_t mul(uint64_t a, uint64_t b) {
    if (b != 0 && a > ~uint64_t{0} / b)
      throw SizeError("state space overflows");
    return a * b;
  }

  const System* sys_;
  std::vector<ProcTable> procs_;
  uint64_t count_ = 0;
};

/// Dense bit set over node ids.
class NodeSet {
 public:
  explicit NodeSet(uint64_t n = 0) : n_(n), bits_((n + 63) / 64, 0) {}
  uint64_t size() const { return n_; }
  bool get(uint64_t i) const { return bits_[i >> 6] >> (i & 63) & 1; }
  void set(uint64_t i) { bits_[i >> 6] |= uint64_t{1} << (i & 63); }
  void reset(uint64_t i) { bits_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
  uint64_t popcount() const {
    uint64_t total = 0;
    for (uint64_t w : bits_)
      total += static_cast<uint64_t>(__builtin_popcountll(w));
    return total;
  }

 private:
  uint64_t n_;
  std::vector<uint64_t> bits_;
};

/**
 * The full transition graph of a small instance under every central
 * demon choice: one arc per (configuration, scheduled process). Arcs
 * carry the per-event violation label (an unpermitted message write,
 * or a quasi-rendezvous read with no write pending) and, for liveness
 * analysis, which Write register the step writes. The System must
 * outlive the graph.
 */
class StateGraph {
 public:
  static constexpr uint8_t kViolation = 0x80;

  StateGraph(const System& sys, uint64_t node_cap)
      : space_(sys), nproc_(sys.process_count()) {
    if (sys.process_count() > 3)
      throw UsageError("exhaustive exploration supports at most 3 processes");
    if (space_.count() > node_cap)
      throw SizeError("state space has " + std::to_string(space_.count()) +
                      " configurations, above the cap of " +
                      std::to_string(node_cap));
    if (space_.count() > 0xFFFFFFFFull)
      throw SizeError("state space exceeds 32-bit node ids");
    build();
  }

  const StateSpace& space() const { return space_; }
  uint64_t node_count() const { return space_.count(); }
  int process_count() const { return nproc_; }

  uint32_t target(uint64_t node, int p) const {
    return arcs_[node * nproc_ + p];
  }
  bool labeled(uint64_t node, int p) const {
    return meta_[node * nproc_ + p] & kViolation;
  }
  /// Flat register index written by the arc's step if it is a
  /// Write-register write, else -1.
  int written_register(uint64_t node, int p) const {
    uint8_t m = meta_[node * nproc_ + p] & 0x7F;
    return m == 0 ? -1 : m - 1;
  }

 private:
  void build() {
    const System& sys = space_.system();
    const uint64_t n = space_.count();
    arcs_.resize(n * nproc_);
    meta_.resize(n * nproc_);
    Configuration base = canonical_initial(sys);
    Configuration scratch = base;
    const bool quasi = sys.kind() == ProtocolKind::QuasiRendezvous;
    for (uint64_t id = 0; id < n; ++id) {
      space_.decode(id, base);
      for (int p = 0; p < nproc_; ++p) {
        const Step& s = sys.program(p).steps[base.procs[p].pc];
        uint8_t m = 0;
        if (s.action == StepAction::Write && s.reg_side == RegSide::Own &&
            s.reg_kind == RegisterKind::Write) {
          int q = sys.topology().neighbor_at(p, s.nb);
          if (!allows_write(sys, base, p, q)) m |= kViolation;
          m |= static_cast<uint8_t>(
              sys.layout().index(p, s.nb, RegisterKind::Write) + 1);
        } else if (quasi && s.action == StepAction::Read &&
                   s.reg_side == RegSide::Peer &&
                   s.reg_kind == RegisterKind::Write) {
          // a read of the peer's message with no write pending breaks
          // the exactly-once discipline
          int q = sys.topology().neighbor_at(p, s.nb);
          if (allows_write(sys, base, q, p)) m |= kViolation;
        }
        scratch = base;
        apply_step(sys, scratch, p);
        arcs_[id * nproc_ + p] = static_cast<uint32_t>(space_.encode(scratch));
        meta_[id * nproc_ + p] = m;
      }
    }
  }

  StateSpace space_;
  int nproc_;
  std::vector<uint32_t> arcs_;
  std::vector<uint8_t> meta_;
};

/**
 * The greatest set of configurations that is closed under every arc
 * and from which no violation-labeled arc is reachable: the
 * constructive legitimacy predicate. Computed as the complement of
 * backward reachability from the nodes with a labeled outgoing arc.
 */
inline NodeSet legitimate_set(const StateGraph& graph) {
  const uint64_t n = graph.node_count();
  const int nproc = graph.process_count();
  NodeSet removed(n);
  std::vector<uint32_t> worklist;
  for (uint64_t u = 0; u < n; ++u)
    for (int p = 0; p < nproc; ++p)
      if (graph.labeled(u, p)) {
        removed.set(u);
        worklist.push_back(static_cast<uint32_t>(u));
        break;
      }

  // reverse adjacency, CSR
  std::vector<uint32_t> offset(n + 1, 0);
  for (uint64_t u = 0; u < n; ++u)
    for (int p = 0; p < nproc; ++p) ++offset[graph.target(u, p) + 1];
  for (uint64_t i = 1; i <= n; ++i) offset[i] += offset[i - 1];
  std::vector<uint32_t> sources(offset[n]);
  {
    std::vector<uint32_t> fill(offset.begin(), offset.end() - 1);
    for (uint64_t u = 0; u < n; ++u)
      for (int p = 0; p < nproc; ++p)
        sources[fill[graph.target(u, p)]++] = static_cast<uint32_t>(u);
  }

  while (!worklist.empty()) {
    uint32_t v = worklist.back();
    worklist.pop_back();
    for (uint32_t i = offset[v]; i < offset[v + 1]; ++i) {
      uint32_t u = sources[i];
      if (!removed.get(u)) {
        removed.set(u);
        worklist.push_back(u);
      }
    }
  }

  NodeSet legit(n);
  for (uint64_t u = 0; u < n; ++u)
    if (!removed.get(u)) legit.set(u);
  return legit;
}

/// A lasso-shaped refutation: from `start` (every configuration is a
/// valid start), the cycle schedule is fair, can repeat forever, and
/// never reaches legitimate behavior.
struct Counterexample {
  uint64_t start = 0;
  std::vector<int> schedule;  // one lap around the cycle
  std::string reason;
};

struct VerifyResult {
  bool verified = false;
  std::optional<Counterexample> cex;
};

namespace detail {

/**
 * Iterative Tarjan SCC over the arc subset accepted by ArcOk,
 * restricted to nodes accepted by NodeOk. A node is on the Tarjan
 * stack iff it is visited and unassigned, so no separate onstack set
 * is needed.
 */
class SccAnalysis {
 public:
  static constexpr uint32_t kNone = 0xFFFFFFFF;

  template <typename NodeOk, typename ArcOk>
  SccAnalysis(const StateGraph& graph, NodeOk node_ok, ArcOk arc_ok)
      : nproc_(graph.process_count()) {
    const uint64_t n = graph.node_count();
    comp_.assign(n, kNone);
    std::vector<uint32_t> index(n, 0), low(n, 0);
    std::vector<uint32_t> stack;
    std::vector<std::pair<uint32_t, int>> frames;
    uint32_t next_index = 1;

    for (uint64_t root = 0; root < n; ++root) {
      if (index[root] != 0 || !node_ok(root)) continue;
      index[root] = low[root] = next_index++;
      stack.push_back(static_cast<uint32_t>(root));
      frames.emplace_back(static_cast<uint32_t>(root), 0);
      while (!frames.empty()) {
        uint32_t u = frames.back().first;
        if (frames.back().second < nproc_) {
          int p = frames.back().second++;
          if (!arc_ok(u, p)) continue;
          uint32_t v = graph.target(u, p);
          if (!node_ok(v)) continue;
          if (index[v] == 0) {
            index[v] = low[v] = next_index++;
            stack.push_back(v);
            frames.emplace_back(v, 0);
          } else if (comp_[v] == kNone) {  // still on the stack
            low[u] = std::min(low[u], index[v]);
          }
        } else {
          if (low[u] == index[u]) {
            uint32_t c = comp_count_++;
            uint32_t w;
            do {
              w = stack.back();
              stack.pop_back();
              comp_[w] = c;
            } while (w != u);
          }
          frames.pop_back();
          if (!frames.empty()) {
            uint32_t parent = frames.back().first;
            low[parent] = std::min(low[parent], low[u]);
          }
        }
      }
    }

    // per-component scheduled-process mask over internal arcs
    sched_mask_.assign(comp_count_, 0);
    for (uint64_t u = 0; u < n; ++u) {
      if (comp_[u] == kNone) continue;
      for (int p = 0; p < nproc_; ++p) {
        if (!arc_ok(static_cast<uint32_t>(u), p)) continue;
        uint32_t v = graph.target(u, p);
        if (node_ok(v) && comp_[v] == comp_[u])
          sched_mask_[comp_[u]] |= uint8_t{1} << p;
      }
    }
  }

  /// Any component whose internal arcs schedule every process: a
  /// fair-sustainable cycle lives inside it.
  std::optional<uint32_t> fair_component() const {
    uint8_t full = static_cast<uint8_t>((1 << nproc_) - 1);
    for (uint32_t c = 0; c < comp_count_; ++c)
      if (sched_mask_[c] == full) return c;
    return std::nullopt;
  }

  uint32_t component_of(uint64_t u) const { return comp_[u]; }

 private:
  int nproc_;
  std::vector<uint32_t> comp_;
  std::vector<uint8_t> sched_mask_;
  uint32_t comp_count_ = 0;
};

/**
 * Builds one fair lap inside component `c`: a closed walk traversing
 * at least one internal arc of every process. In a strongly connected
 * component the BFS legs between the required arcs always exist.
 */
template <typename ArcOk>
inline Counterexample fair_lap(const StateGraph& graph, const SccAnalysis& scc,
                               uint32_t c, ArcOk arc_ok) {
  const int nproc = graph.process_count();
  const uint64_t n = graph.node_count();
  std::vector<std::pair<uint32_t, int>> required;
  for (int p = 0; p < nproc; ++p) {
    bool found = false;
    for (uint64_t u = 0; u < n && !found; ++u)
      if (scc.component_of(u) == c && arc_ok(static_cast<uint32_t>(u), p) &&
          scc.component_of(graph.target(u, p)) == c) {
        required.emplace_back(static_cast<uint32_t>(u), p);
        found = true;
      }
  }

  std::vector<uint32_t> parent(n);
  std::vector<int8_t> via(n);
  auto bfs_path = [&](uint32_t from, uint32_t to) {
    std::vector<int> sched;
    if (from == to) return sched;
    std::fill(parent.begin(), parent.end(), SccAnalysis::kNone);
    std::vector<uint32_t> queue{from};
    parent[from] = from;
    for (size_t head = 0; head < queue.size(); ++head) {
      uint32_t u = queue[head];
      for (int p = 0; p < nproc; ++p) {
        if (!arc_ok(u, p)) continue;
        uint32_t v = graph.target(u, p);
        if (scc.component_of(v) != c || parent[v] != SccAnalysis::kNone)
          continue;
        parent[v] = u;
        via[v] = static_cast<int8_t>(p);
        if (v == to) {
          queue.clear();
          break;
        }
        queue.push_back(v);
      }
      if (queue.empty()) break;
    }
    for (uint32_t v = to; v != from; v = parent[v]) sched.push_back(via[v]);
    std::reverse(sched.begin(), sched.end());
    return sched;
  };

  Counterexample cex;
  cex.start = required[0].first;
  uint32_t at = required[0].first;
  for (auto [u, slot] : required) {
    std::vector<int> leg = bfs_path(at, u);
    cex.schedule.insert(cex.schedule.end(), leg.begin(), leg.end());
    cex.schedule.push_back(slot);
    at = graph.target(u, slot);
  }
  std::vector<int> back = bfs_path(at, static_cast<uint32_t>(cex.start));
  cex.schedule.insert(cex.schedule.end(), back.begin(), back.end());
  return cex;
}

}  // namespace detail

/**
 * Verifies that every fair execution from every configuration reaches
 * the legitimate set and keeps every process writing. Two refutation
 * shapes are searched:
 *
 *   - a fair-sustainable cycle entirely outside the legitimate set
 *     (the system can avoid legitimacy forever), and
 *   - a fair-sustainable cycle on which some process never writes one
 *     of its Write registers (a livelock: everyone keeps taking steps
 *     but communication stops, the failure mode of per-link sequenced
 *     pairing on rings).
 *
 * Cycles sustainable only by unfair schedules are permitted.
 */
inline VerifyResult verify_convergence(const StateGraph& graph,
                                       const NodeSet& legit) {
  const System& sys = graph.space().system();
  VerifyResult result;

  // (1) fair cycle among non-legitimate nodes
  {
    auto node_ok = [&](uint64_t u) { return !legit.get(u); };
    auto arc_ok = [](uint32_t, int) { return true; };
    detail::SccAnalysis scc(graph, node_ok, arc_ok);
    if (auto c = scc.fair_component()) {
      result.cex = detail::fair_lap(graph, scc, *c, arc_ok);
      result.cex->reason = "fair cycle that never enters the legitimate set";
      return result;
    }
  }

  // (2) fair cycle omitting some Write register forever
  auto all_nodes = [](uint64_t) { return true; };
  for (int p = 0; p < sys.process_count(); ++p)
    for (int nb = 0; nb < sys.topology().degree(p); ++nb) {
      int rid = sys.layout().index(p, nb, RegisterKind::Write);
      auto arc_ok = [&graph, p, rid](uint32_t u, int slot) {
        return !(slot == p && graph.written_register(u, slot) == rid);
      };
      detail::SccAnalysis scc(graph, all_nodes, arc_ok);
      if (auto c = scc.fair_component()) {
        result.cex = detail::fair_lap(graph, scc, *c, arc_ok);
        result.cex->reason =
            "fair cycle on which process " + std::to_string(p) +
            " never writes Write[" + std::to_string(p) + "->" +
            std::to_string(sys.topology().neighbor_at(p, nb)) + "]";
        return result;
      }
    }

  result.verified = true;
  return result;
}

}  // namespace selfstab

#endif  // SELFSTAB_EXPLORER_HPP_
