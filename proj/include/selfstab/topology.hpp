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

#ifndef SELFSTAB_TOPOLOGY_HPP_
#define SELFSTAB_TOPOLOGY_HPP_

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "selfstab/rng.hpp"
#include "selfstab/value.hpp"

namespace selfstab {

/**
 * Connected simple undirected process graph. Neighbor lists are kept
 * in edge insertion order: the loop index i of the protocol sweeps is
 * the position in this list, so the order is part of an instance's
 * identity.
 */
class Topology {
 public:
  Topology(int n, const std::vector<std::pair<int, int>>& edges)
      : n_(n), edges_(edges) {
    if (n < 2) throw UsageError("topology needs at least 2 processes");
    neighbors_.resize(n);
    for (auto [u, v] : edges) add_edge(u, v);
    if (edges.empty()) throw UsageError("topology has no edges");
    check_connected();
  }

  int process_count() const { return n_; }
  int degree(int p) const { return static_cast<int>(neighbors_.at(p).size()); }
  int max_degree() const {
    int m = 0;
    for (int p = 0; p < n_; ++p) m = std::max(m, degree(p));
    return m;
  }
  const std::vector<int>& neighbors(int p) const { return neighbors_.at(p); }
  int neighbor_at(int p, int index) const { return neighbors_.at(p).at(index); }

  bool has_edge(int u, int v) const {
    if (u < 0 || u >= n_ || v < 0 || v >= n_) return false;
    const auto& nb = neighbors_[u];
    return std::find(nb.begin(), nb.end(), v) != nb.end();
  }

  /// Position of q in p's neighbor list (the sweep index for that link).
  int neighbor_index(int p, int q) const {
    const auto& nb = neighbors_.at(p);
    for (size_t i = 0; i < nb.size(); ++i)
      if (nb[i] == q) return static_cast<int>(i);
    throw UsageError("processes " + std::to_string(p) + " and " +
                     std::to_string(q) + " are not neighbours");
  }

  size_t edge_count() const { return edges_.size(); }

  /// Edges in insertion order (the order that defines neighbor lists).
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool operator==(const Topology&) const = default;

 private:
  void add_edge(int u, int v) {
    if (u < 0 || u >= n_ || v < 0 || v >= n_)
      throw UsageError("edge endpoint out of range");
    if (u == v) throw UsageError("self-loops are not allowed");
    if (has_edge(u, v)) throw UsageError("duplicate edge");
    neighbors_[u].push_back(v);
    neighbors_[v].push_back(u);
  }

  void check_connected() const {
    std::vector<bool> seen(n_, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      for (int q : neighbors_[p])
        if (!seen[q]) {
          seen[q] = true;
          ++count;
          stack.push_back(q);
        }
    }
    if (count != n_) throw UsageError("topology must be connected");
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
};

// ---------------------------------------------------------------------------
// Built-in generators.

inline Topology make_line(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Topology(n, edges);
}

inline Topology make_ring(int n) {
  if (n == 2) return make_line(2);  // degenerate ring: a single link
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Topology(n, edges);
}

inline Topology make_star(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return Topology(n, edges);
}

inline Topology make_complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Topology(n, edges);
}

/**
 * Erdos-Renyi G(n, p). Samples are redrawn (advancing the stream) until
 * the graph comes out connected, so the result always satisfies the
 * connectivity invariant while staying a pure function of the seed.
 */
inline Topology make_gnp(int n, double p, uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw UsageError("gnp probability outside [0,1]");
  Rng rng(Rng::derive(seed, 0x67'6e'70));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.unit() < p) edges.emplace_back(i, j);
    if (edges.empty()) continue;
    try {
      return Topology(n, edges);
    } catch (const UsageError&) {
      continue;  // disconnected; resample
    }
  }
  throw UsageError("gnp failed to produce a connected graph (p too small?)");
}

// ---------------------------------------------------------------------------
// Text format: `n <count>` then `e <u> <v>` per edge, 0-based ids.
// Neighbor order = order of appearance.

inline Topology parse_topology(std::istream& in) {
  std::string tag;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (in >> tag) {
    if (tag == "n") {
      if (!(in >> n)) throw UsageError("topology file: bad process count");
    } else if (tag == "e") {
      int u, v;
      if (!(in >> u >> v)) throw UsageError("topology file: bad edge line");
      edges.emplace_back(u, v);
    } else if (tag[0] == '#') {
      std::string rest;
      std::getline(in, rest);
    } else {
      throw UsageError("topology file: unknown line tag '" + tag + "'");
    }
  }
  if (n < 0) throw UsageError("topology file: missing 'n' line");
  return Topology(n, edges);
}

inline Topology parse_topology(const std::string& text) {
  std::istringstream in(text);
  return parse_topology(in);
}

inline void write_topology(std::ostream& out, const Topology& topo) {
  out << "n " << topo.process_count() << "\n";
  for (auto [u, v] : topo.edges()) out << "e " << u << " " << v << "\n";
}

}  // namespace selfstab

#endif  // SELFSTAB_TOPOLOGY_HPP_
