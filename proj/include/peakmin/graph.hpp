#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peakmin/random.hpp"

namespace peakmin {

/// Fixed undirected communication graph on nodes 1..n_nodes.
///
/// Edges are stored as unordered pairs (i, j) with i < j; adjacency lists
/// are precomputed and sorted ascending so that message iteration order is
/// deterministic. Immutable after construction.
struct Graph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;          // canonical: first < second
  std::vector<std::vector<int>> adjacency;         // adjacency[i-1], sorted

  int num_edges() const { return static_cast<int>(edges.size()); }
};

/// Builds a Graph from an edge list, validating node ids, rejecting
/// self-loops and duplicate edges. Node ids are 1-based.
inline Graph make_graph(int n_nodes, std::vector<std::pair<int, int>> edge_list) {
  if (n_nodes < 1) throw std::invalid_argument("graph: n_nodes must be >= 1");
  Graph g;
  g.n_nodes = n_nodes;
  g.adjacency.assign(static_cast<std::size_t>(n_nodes), {});
  std::set<std::pair<int, int>> seen;
  for (auto [i, j] : edge_list) {
    if (i < 1 || i > n_nodes || j < 1 || j > n_nodes)
      throw std::invalid_argument("graph: node id out of range");
    if (i == j) throw std::invalid_argument("graph: self-loop not allowed");
    if (i > j) std::swap(i, j);
    if (!seen.insert({i, j}).second)
      throw std::invalid_argument("graph: duplicate edge");
    g.edges.emplace_back(i, j);
    g.adjacency[static_cast<std::size_t>(i - 1)].push_back(j);
    g.adjacency[static_cast<std::size_t>(j - 1)].push_back(i);
  }
  std::sort(g.edges.begin(), g.edges.end());
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

/// True iff every node is reachable from node 1. A single node with no
/// edges counts as connected.
inline bool is_connected(const Graph& g) {
  if (g.n_nodes <= 1) return true;
  std::vector<char> visited(static_cast<std::size_t>(g.n_nodes), 0);
  std::vector<int> stack = {1};
  visited[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : g.adjacency[static_cast<std::size_t>(u - 1)]) {
      if (!visited[static_cast<std::size_t>(v - 1)]) {
        visited[static_cast<std::size_t>(v - 1)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == g.n_nodes;
}

/// Sorted neighbor list of node i (1-based).
inline const std::vector<int>& neighbors(const Graph& g, int i) {
  if (i < 1 || i > g.n_nodes) throw std::out_of_range("graph: node id out of range");
  return g.adjacency[static_cast<std::size_t>(i - 1)];
}

/// Samples a connected Erdos-Renyi graph G(n, p): each of the n(n-1)/2
/// candidate edges is included independently with probability p. The whole
/// graph is resampled until connected, up to max_retries attempts.
/// Deterministic in (n, p, seed).
inline Graph gen_erdos_renyi(int n, double p, std::uint64_t seed,
                             int max_retries = 1000) {
  if (n < 1) throw std::invalid_argument("gen_erdos_renyi: n must be >= 1");
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("gen_erdos_renyi: p must be in [0, 1]");
  Rng rng(seed);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<std::pair<int, int>> edge_list;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (rng.bernoulli(p)) edge_list.emplace_back(i, j);
    Graph g = make_graph(n, std::move(edge_list));
    if (is_connected(g)) return g;
  }
  throw std::runtime_error(
      "gen_erdos_renyi: no connected sample within " +
      std::to_string(max_retries) + " retries (n=" + std::to_string(n) +
      ", p=" + std::to_string(p) + ")");
}

/// Path graph 1-2-...-n.
inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> edge_list;
  for (int i = 1; i < n; ++i) edge_list.emplace_back(i, i + 1);
  return make_graph(n, std::move(edge_list));
}

/// Complete graph on n nodes.
inline Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> edge_list;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) edge_list.emplace_back(i, j);
  return make_graph(n, std::move(edge_list));
}

// Edge-list text format: first line "n m", then m lines "i j".

inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.n_nodes << ' ' << g.num_edges() << '\n';
  for (const auto& [i, j] : g.edges) out << i << ' ' << j << '\n';
}

inline Graph parse_edge_list(std::istream& in) {
  int n = 0, m = 0;
  if (!(in >> n >> m)) throw std::runtime_error("edge list: bad header line");
  std::vector<std::pair<int, int>> edge_list;
  edge_list.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    int i = 0, j = 0;
    if (!(in >> i >> j))
      throw std::runtime_error("edge list: expected " + std::to_string(m) +
                               " edges, got " + std::to_string(k));
    edge_list.emplace_back(i, j);
  }
  return make_graph(n, std::move(edge_list));
}

}  // namespace peakmin
