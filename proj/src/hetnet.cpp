#include "hnil/hetnet.hpp"

#include <algorithm>
#include <ostream>

namespace hnil {

void HetGraph::finalize() {
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

long HetGraph::num_edges() const {
  long deg = 0;
  for (const auto& list : adj) deg += static_cast<long>(list.size());
  return deg / 2;
}

HetGraph build_graph(const Corpus& corpus) {
  HetGraph g;
  g.init(static_cast<int>(corpus.questions.size()),
         static_cast<int>(corpus.users.size()),
         static_cast<int>(corpus.categories.size()));
  for (int i = 0; i < g.n_questions; ++i) {
    const auto& q = corpus.questions[i];
    g.add_edge({NodeType::Question, i}, {NodeType::User, q.asker_ord});
    g.add_edge({NodeType::Question, i}, {NodeType::Category, q.category_ord});
  }
  for (int u = 0; u < g.n_users; ++u)
    for (int f : corpus.users[u].friends)
      if (u < f) g.add_edge({NodeType::User, u}, {NodeType::User, f});
  g.finalize();
  return g;
}

namespace {

const std::string& node_id(const Corpus& corpus, HetNode v) {
  switch (v.type) {
    case NodeType::Question: return corpus.questions[v.ord].id;
    case NodeType::User: return corpus.users[v.ord].id;
    default: return corpus.categories[v.ord];
  }
}

char node_tag(NodeType t) {
  switch (t) {
    case NodeType::Question: return 'q';
    case NodeType::User: return 'u';
    default: return 'c';
  }
}

}  // namespace

void dump_edges(const HetGraph& graph, const Corpus& corpus,
                std::ostream& out) {
  for (int p = 0; p < graph.num_nodes(); ++p) {
    HetNode a = graph.unpack(p);
    for (HetNode b : graph.adj[p]) {
      if (graph.packed(b) <= p) continue;  // each edge once
      out << node_tag(a.type) << ':' << node_id(corpus, a) << ' '
          << node_tag(b.type) << ':' << node_id(corpus, b) << '\n';
    }
  }
}

Walk random_walk(const HetGraph& graph, HetNode start, int max_len,
                 std::mt19937_64& rng) {
  if (max_len < 1) throw std::invalid_argument("walk length must be >= 1");
  Walk walk;
  walk.nodes.reserve(max_len);
  walk.nodes.push_back(start);
  HetNode cur = start;
  while (static_cast<int>(walk.nodes.size()) < max_len) {
    const auto& nb = graph.neighbors(cur);
    if (nb.empty()) break;
    std::uniform_int_distribution<size_t> pick(0, nb.size() - 1);
    cur = nb[pick(rng)];
    walk.nodes.push_back(cur);
  }
  return walk;
}

std::vector<Walk> sample_walk_set(const HetGraph& graph, int walks_per_vertex,
                                  int max_len, std::uint64_t seed) {
  std::vector<Walk> walks;
  walks.reserve(static_cast<size_t>(graph.num_nodes()) * walks_per_vertex);
  for_each_walk(graph, walks_per_vertex, max_len, seed,
                [&](Walk w) { walks.push_back(std::move(w)); });
  return walks;
}

std::vector<Window> extract_windows(const Walk& walk, int radius) {
  if (radius < 1) throw std::invalid_argument("window radius must be >= 1");
  const int n = static_cast<int>(walk.nodes.size());
  std::vector<Window> windows;
  windows.reserve(n);
  for (int i = 0; i < n; ++i) {
    Window w;
    w.center = walk.nodes[i];
    int lo = std::max(0, i - radius);
    int hi = std::min(n - 1, i + radius);
    for (int j = lo; j <= hi; ++j)
      if (j != i) w.context.push_back(walk.nodes[j]);
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace hnil
