#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pdmmlab {

// Undirected communication graph with canonical edge and directed-slot
// indexing. Undirected edge l = (i,j), i < j, owns the two auxiliary slots
//   slot(z_{i|j}) = l      (held by i)
//   slot(z_{j|i}) = l + m  (held by j)
// so that swapping the two halves of a z vector swaps the edge directions.
class Graph {
 public:
  // Normalizes endpoint order and sorts edges; rejects self-loops,
  // duplicates, and out-of-range endpoints.
  Graph(int n, std::vector<std::pair<int, int>> edges);

  int n() const { return n_; }
  int m() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return nbrs_[i]; }
  int degree(int i) const { return static_cast<int>(nbrs_[i].size()); }

  // Index of undirected edge (a,b) in [0,m), or -1 if absent.
  int edge_index(int a, int b) const;

  // Row of z_{holder|peer}; throws std::invalid_argument when (holder, peer)
  // is not an edge.
  int directed_slot(int holder, int peer) const;

  // Opposite direction of the same edge.
  static int partner_slot(int slot, int m) { return slot < m ? slot + m : slot - m; }

  // Node that holds z at this slot (z_{h|w} has holder h, writer w).
  int slot_holder(int slot) const;
  // Node that computes and transmits the slot's update.
  int slot_writer(int slot) const;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> nbrs_;
};

bool is_connected(const Graph& g);

// Connectivity-threshold radius sqrt(2 ln n / n) on the unit square.
double rgg_paper_radius(int n);

// Nodes i.i.d. uniform on the unit square, edge iff distance <= radius,
// resampled until connected. Throws std::runtime_error after max_attempts
// failed draws. Identical seed, identical graph.
Graph generate_rgg(int n, double radius, std::uint64_t seed, int max_attempts = 100);

// Plain-text format: line 1 "n m", then m lines "i j" with i < j.
Graph parse_graph(std::istream& in, const std::string& name = "<stream>");
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

}  // namespace pdmmlab
