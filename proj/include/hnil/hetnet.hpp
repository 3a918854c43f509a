#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "hnil/common.hpp"
#include "hnil/corpus.hpp"

namespace hnil {

enum class NodeType : std::uint8_t { Question = 0, User = 1, Category = 2 };

struct HetNode {
  NodeType type = NodeType::Question;
  int ord = 0;

  auto operator<=>(const HetNode&) const = default;
};

// Undirected heterogeneous graph over questions, users and categories.
// Nodes are packed as [questions | users | categories] for flat adjacency.
struct HetGraph {
  int n_questions = 0;
  int n_users = 0;
  int n_categories = 0;
  std::vector<std::vector<HetNode>> adj;

  void init(int nq, int nu, int nc) {
    n_questions = nq;
    n_users = nu;
    n_categories = nc;
    adj.assign(num_nodes(), {});
  }
  int num_nodes() const { return n_questions + n_users + n_categories; }
  int packed(HetNode v) const {
    switch (v.type) {
      case NodeType::Question: return v.ord;
      case NodeType::User: return n_questions + v.ord;
      default: return n_questions + n_users + v.ord;
    }
  }
  HetNode unpack(int p) const {
    if (p < n_questions) return {NodeType::Question, p};
    if (p < n_questions + n_users) return {NodeType::User, p - n_questions};
    return {NodeType::Category, p - n_questions - n_users};
  }
  void add_edge(HetNode a, HetNode b) {
    adj[packed(a)].push_back(b);
    adj[packed(b)].push_back(a);
  }
  void finalize();  // sort + dedupe adjacency lists
  const std::vector<HetNode>& neighbors(HetNode v) const {
    return adj[packed(v)];
  }
  long num_edges() const;
};

// Edges: question-asker, question-category, user-user friendship.
HetGraph build_graph(const Corpus& corpus);

// One edge per line as "<type>:<id> <type>:<id>", types q/u/c, for external
// inspection. Deterministic order.
void dump_edges(const HetGraph& graph, const Corpus& corpus,
                std::ostream& out);

struct Walk {
  std::vector<HetNode> nodes;
};

// Truncated random walk: uniform next-hop among neighbors. Terminates early
// at isolated nodes; otherwise exactly max_len nodes.
Walk random_walk(const HetGraph& graph, HetNode start, int max_len,
                 std::mt19937_64& rng);

// n walks per vertex across the whole graph. Vertex order is shuffled per
// pass; each walk draws from its own seed stream derived from
// (seed, pass, vertex) so the set is reproducible.
template <class F>
void for_each_walk(const HetGraph& graph, int walks_per_vertex, int max_len,
                   std::uint64_t seed, F&& fn) {
  std::vector<int> order(graph.num_nodes());
  for (int i = 0; i < graph.num_nodes(); ++i) order[i] = i;
  for (int pass = 0; pass < walks_per_vertex; ++pass) {
    auto shuffle_rng = make_rng(derive_seed(seed, 0xA1u, pass));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (int p : order) {
      auto walk_rng = make_rng(derive_seed(seed, 0xB2u, pass, p));
      fn(random_walk(graph, graph.unpack(p), max_len, walk_rng));
    }
  }
}

std::vector<Walk> sample_walk_set(const HetGraph& graph, int walks_per_vertex,
                                  int max_len, std::uint64_t seed);

struct Window {
  HetNode center;
  std::vector<HetNode> context;
};

// Skip-gram windows: every position is a center; context is up to `radius`
// neighbors on each side, truncated at walk boundaries.
std::vector<Window> extract_windows(const Walk& walk, int radius);

}  // namespace hnil
