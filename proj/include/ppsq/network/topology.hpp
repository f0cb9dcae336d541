// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Undirected communication graphs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ppsq/common.hpp"

namespace ppsq {

class Topology {
 public:
  Topology() = default;

  /// Edges are given as unordered pairs; duplicates are merged. Throws if a
  /// self-loop or out-of-range node appears or the graph is disconnected.
  Topology(int m, std::vector<std::pair<int, int>> edges, std::string tag)
      : m_(m), tag_(std::move(tag)), adj_(static_cast<std::size_t>(m)) {
    require(m >= 1, "Topology: needs at least one node");
    for (auto [i, j] : edges) {
      require(i >= 0 && j >= 0 && i < m && j < m, "Topology: node out of range");
      require(i != j, "Topology: self-loops are not allowed");
      if (i > j) std::swap(i, j);
      edges_.emplace_back(i, j);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (auto [i, j] : edges_) {
      adj_[i].push_back(j);
      adj_[j].push_back(i);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
    require(connected(), "Topology: graph '" + tag_ + "' is disconnected");
  }

  int size() const { return m_; }
  const std::string& tag() const { return tag_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_.at(i); }
  int degree(int i) const { return static_cast<int>(adj_.at(i).size()); }

  int max_degree() const {
    int d = 0;
    for (int i = 0; i < m_; ++i) d = std::max(d, degree(i));
    return d;
  }

  /// Hop distances from `source` (-1 when unreachable).
  std::vector<int> distances(int source) const {
    std::vector<int> dist(static_cast<std::size_t>(m_), -1);
    std::queue<int> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj_[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    return dist;
  }

  bool connected() const {
    const auto d = distances(0);
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
  }

  int diameter() const {
    int D = 0;
    for (int i = 0; i < m_; ++i) {
      const auto d = distances(i);
      D = std::max(D, *std::max_element(d.begin(), d.end()));
    }
    return D;
  }

 private:
  int m_ = 0;
  std::string tag_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
};

inline Topology ring(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  if (m >= 3) e.emplace_back(m - 1, 0);
  return Topology(m, std::move(e), "ring");
}

/// Node 0 is the hub.
inline Topology star(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < m; ++i) e.emplace_back(0, i);
  return Topology(m, std::move(e), "star");
}

inline Topology complete(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) e.emplace_back(i, j);
  return Topology(m, std::move(e), "complete");
}

/// rows x cols lattice, node index r * cols + c.
inline Topology grid(int rows, int cols) {
  require(rows >= 1 && cols >= 1, "grid: needs positive dimensions");
  std::vector<std::pair<int, int>> e;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) e.emplace_back(id, id + 1);
      if (r + 1 < rows) e.emplace_back(id, id + cols);
    }
  return Topology(rows * cols, std::move(e), "grid");
}

inline constexpr int kErdosRenyiAttempts = 100;

/// G(m, p), redrawn until connected.
inline Topology erdos_renyi(int m, double p, std::uint64_t seed) {
  require(m >= 1, "erdos_renyi: needs at least one node");
  require(p > 0.0 && p <= 1.0, "erdos_renyi: p must be in (0, 1]");
  for (int attempt = 0; attempt < kErdosRenyiAttempts; ++attempt) {
    Rng rng = make_rng(seed, 0x6572, static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        if (uniform01(rng) < p) e.emplace_back(i, j);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
    for (auto [i, j] : e) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          stack.push_back(v);
        }
    }
    if (count == m) return Topology(m, std::move(e), "erdos_renyi");
  }
  throw InvalidArgument("erdos_renyi: no connected graph in " +
                        std::to_string(kErdosRenyiAttempts) + " attempts");
}

}  // namespace ppsq
