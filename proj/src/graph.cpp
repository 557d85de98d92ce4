#include "pdmmlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pdmmlab/rng.hpp"

namespace pdmmlab {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
  if (n < 1) throw std::invalid_argument("graph: node count must be >= 1");
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
    if (a == b) throw std::invalid_argument("graph: self-loop at node " + std::to_string(a));
    if (a < 0 || b >= n)
      throw std::invalid_argument("graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") out of range for n=" + std::to_string(n));
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("graph: duplicate edge");
  edges_ = std::move(edges);
  nbrs_.assign(n_, {});
  for (auto [a, b] : edges_) {
    nbrs_[a].push_back(b);
    nbrs_[b].push_back(a);
  }
  for (auto& nb : nbrs_) std::sort(nb.begin(), nb.end());
}

int Graph::edge_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(a, b));
  if (it == edges_.end() || *it != std::make_pair(a, b)) return -1;
  return static_cast<int>(it - edges_.begin());
}

int Graph::directed_slot(int holder, int peer) const {
  const int l = edge_index(holder, peer);
  if (l < 0)
    throw std::invalid_argument("directed_slot: (" + std::to_string(holder) + "," +
                                std::to_string(peer) + ") is not an edge");
  return holder < peer ? l : l + m();
}

int Graph::slot_holder(int slot) const {
  return slot < m() ? edges_[slot].first : edges_[slot - m()].second;
}

int Graph::slot_writer(int slot) const {
  return slot < m() ? edges_[slot].second : edges_[slot - m()].first;
}

bool is_connected(const Graph& g) {
  std::vector<char> seen(g.n(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == g.n();
}

double rgg_paper_radius(int n) { return std::sqrt(2.0 * std::log(static_cast<double>(n)) / n); }

Graph generate_rgg(int n, double radius, std::uint64_t seed, int max_attempts) {
  if (n < 1) throw std::invalid_argument("generate_rgg: n must be >= 1");
  if (!(radius > 0)) throw std::invalid_argument("generate_rgg: radius must be > 0");
  if (max_attempts < 1) throw std::invalid_argument("generate_rgg: max_attempts must be >= 1");
  Rng rng(seed);
  const double r2 = radius * radius;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform01();
      y[i] = rng.uniform01();
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = x[i] - x[j], dy = y[i] - y[j];
        if (dx * dx + dy * dy <= r2) edges.emplace_back(i, j);
      }
    }
    Graph g(n, std::move(edges));
    if (is_connected(g)) return g;
  }
  throw std::runtime_error("generate_rgg: not connected after " + std::to_string(max_attempts) +
                           " resamples");
}

Graph parse_graph(std::istream& in, const std::string& name) {
  auto fail = [&](int line, const std::string& what) {
    throw std::runtime_error(name + ": line " + std::to_string(line) + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header 'n m'");
  int n = 0, m = 0;
  {
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> n >> m) || (ss >> extra)) fail(1, "expected 'n m'");
    if (n < 1 || m < 0) fail(1, "invalid counts");
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(m);
  for (int e = 0; e < m; ++e) {
    if (!std::getline(in, line)) fail(2 + e, "unexpected end of file, expected edge");
    std::istringstream ss(line);
    int a = 0, b = 0;
    std::string extra;
    if (!(ss >> a >> b) || (ss >> extra)) fail(2 + e, "expected 'i j'");
    if (a < 0 || b >= n || a >= b) fail(2 + e, "edge must satisfy 0 <= i < j < n");
    edges.emplace_back(a, b);
  }
  int ln = 2 + m;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) fail(ln, "trailing content");
    ++ln;
  }
  return Graph(n, std::move(edges));
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  return parse_graph(in, path);
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << g.n() << ' ' << g.m() << '\n';
  for (auto [a, b] : g.edges()) out << a << ' ' << b << '\n';
}

}  // namespace pdmmlab
