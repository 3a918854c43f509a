#include "hnil/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace hnil {

TermStats build_term_stats(const std::vector<QuestionRecord>& questions) {
  TermStats st;
  st.ids.reserve(questions.size());
  st.docs.reserve(questions.size());
  long total_len = 0;
  for (const auto& q : questions) {
    std::map<int, int> tf;
    int len = 0;
    for (const auto& sent : q.sentences)
      for (int tok : sent) {
        if (tok == 0) continue;  // unknown tokens never match
        ++tf[tok];
        ++len;
      }
    st.ids.push_back(q.id);
    st.doc_len.push_back(len);
    total_len += len;
    std::vector<std::pair<int, int>> terms(tf.begin(), tf.end());
    for (const auto& [term, cnt] : terms) ++st.df[term];
    st.docs.push_back(std::move(terms));
  }
  st.avgdl = st.ids.empty() ? 0.0 : double(total_len) / st.ids.size();
  return st;
}

namespace {

std::map<int, int> query_tf(const QuestionRecord& query) {
  std::map<int, int> tf;
  for (const auto& sent : query.sentences)
    for (int tok : sent)
      if (tok != 0) ++tf[tok];
  return tf;
}

RankedList finish(const TermStats& st, const std::vector<double>& scores,
                  const std::string& exclude_id, int k) {
  RankedList out;
  out.reserve(st.ids.size());
  for (int d = 0; d < st.num_docs(); ++d) {
    if (st.ids[d] == exclude_id) continue;
    out.push_back({st.ids[d], scores[d]});
  }
  sort_and_clip(out, k);
  return out;
}

}  // namespace

RankedList vsm_rank(const TermStats& st, const QuestionRecord& query, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int n = st.num_docs();
  const double N = static_cast<double>(n);

  std::unordered_map<int, double> qw;
  double qnorm2 = 0.0;
  for (const auto& [term, cnt] : query_tf(query)) {
    auto it = st.df.find(term);
    if (it == st.df.end()) continue;  // cannot match anything
    double idf = std::log(N / it->second);
    double w = cnt * idf;
    qw.emplace(term, w);
    qnorm2 += w * w;
  }
  double qnorm = std::sqrt(qnorm2);

  std::vector<double> scores(n, 0.0);
  if (qnorm > 0.0) {
    for (int d = 0; d < n; ++d) {
      double dot = 0.0, dnorm2 = 0.0;
      for (const auto& [term, tf] : st.docs[d]) {
        double idf = std::log(N / st.df.at(term));
        double w = tf * idf;
        dnorm2 += w * w;
        auto it = qw.find(term);
        if (it != qw.end()) dot += w * it->second;
      }
      if (dot != 0.0 && dnorm2 > 0.0)
        scores[d] = dot / (std::sqrt(dnorm2) * qnorm);
    }
  }
  return finish(st, scores, query.id, k);
}

RankedList bm25_rank(const TermStats& st, const QuestionRecord& query,
                     int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  constexpr double k1 = 1.2, b = 0.75;
  const int n = st.num_docs();
  const double N = static_cast<double>(n);

  auto qtf = query_tf(query);
  std::vector<double> scores(n, 0.0);
  for (int d = 0; d < n; ++d) {
    double norm_d =
        st.avgdl > 0.0 ? 1.0 - b + b * st.doc_len[d] / st.avgdl : 1.0;
    double s = 0.0;
    for (const auto& [term, tf] : st.docs[d]) {
      auto it = qtf.find(term);
      if (it == qtf.end()) continue;
      double df = static_cast<double>(st.df.at(term));
      double idf = std::log((N - df + 0.5) / (df + 0.5) + 1.0);
      s += it->second * idf * (tf * (k1 + 1.0)) / (tf + k1 * norm_d);
    }
    scores[d] = s;
  }
  return finish(st, scores, query.id, k);
}

// ------------------------------------------------------------------ hnil

namespace {

QuestionRecord record_for_checkpoint(const Checkpoint& ckpt,
                                     const std::string& id,
                                     const std::string& text,
                                     const std::string& asker_id,
                                     bool* asker_known) {
  QuestionRecord rec;
  rec.id = id;
  rec.text = text;
  auto sentences = tokenize(text);
  if (sentences.empty())
    throw DataError((id.empty() ? std::string("query") : "question " + id) +
                    " tokenizes to nothing");
  for (const auto& sent : sentences) {
    std::vector<int> ids;
    ids.reserve(sent.size());
    for (const auto& tok : sent) ids.push_back(ckpt.vocab.lookup(tok));
    rec.sentences.push_back(std::move(ids));
  }
  rec.asker_ord = -1;
  *asker_known = false;
  if (!asker_id.empty()) {
    for (size_t u = 0; u < ckpt.user_ids.size(); ++u)
      if (ckpt.user_ids[u] == asker_id) {
        rec.asker_ord = static_cast<int>(u);
        *asker_known = true;
        break;
      }
  }
  return rec;
}

}  // namespace

QuestionVec<float> encode_with_checkpoint(const Checkpoint& ckpt,
                                          const std::string& text,
                                          const std::string& asker_id,
                                          const std::string& label) {
  bool known = false;
  QuestionRecord rec =
      record_for_checkpoint(ckpt, label, text, asker_id, &known);
  return encode_question(ckpt.params, rec, known, ckpt.hyper.score_norm);
}

HnilIndex build_hnil_index(const Checkpoint& ckpt,
                           const std::vector<QuestionRecord>& questions) {
  // One-time map instead of the linear scan in record_for_checkpoint.
  std::unordered_map<std::string, int> user_of;
  for (size_t u = 0; u < ckpt.user_ids.size(); ++u)
    user_of.emplace(ckpt.user_ids[u], static_cast<int>(u));

  HnilIndex index;
  index.normalized = ckpt.hyper.score_norm;
  index.ids.reserve(questions.size());
  index.vectors.resize(ckpt.params.dims.question_dim(),
                       static_cast<Eigen::Index>(questions.size()));
  Eigen::Index col = 0;
  for (const auto& q : questions) {
    QuestionRecord rec = q;  // keep id/text; re-derive tokens + asker
    rec.sentences.clear();
    auto sentences = tokenize(q.text);
    if (sentences.empty())
      throw DataError("question " + q.id + " tokenizes to nothing");
    for (const auto& sent : sentences) {
      std::vector<int> ids;
      ids.reserve(sent.size());
      for (const auto& tok : sent) ids.push_back(ckpt.vocab.lookup(tok));
      rec.sentences.push_back(std::move(ids));
    }
    auto it = user_of.find(q.asker);
    bool known = it != user_of.end();
    rec.asker_ord = known ? it->second : -1;
    auto vec = encode_question(ckpt.params, rec, known, ckpt.hyper.score_norm);
    index.ids.push_back(q.id);
    index.vectors.col(col++) = vec.v;
  }
  return index;
}

RankedList hnil_rank(const HnilIndex& index, const QuestionVec<float>& query,
                     const std::string& exclude_id, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (query.v.size() != index.vectors.rows())
    throw DataError("query vector size does not match index dims");
  VecS<float> scores = index.vectors.transpose() * query.v;
  RankedList out;
  out.reserve(index.ids.size());
  for (size_t i = 0; i < index.ids.size(); ++i) {
    if (index.ids[i] == exclude_id) continue;
    out.push_back({index.ids[i], static_cast<double>(scores(i))});
  }
  sort_and_clip(out, k);
  return out;
}

RankedList hnil_rank(const HnilIndex& index, const Checkpoint& ckpt,
                     const QuestionRecord& query, int k) {
  auto vec = encode_with_checkpoint(ckpt, query.text, query.asker, query.id);
  return hnil_rank(index, vec, query.id, k);
}

// -------------------------------------------------------------- deepwalk

MatS<float> deepwalk_train(const HetGraph& graph, const DeepwalkHyper& hyper,
                           std::uint64_t seed) {
  if (graph.num_nodes() == 0) throw DataError("deepwalk: empty graph");
  if (hyper.dim < 1 || hyper.walk_len < 2 || hyper.walks < 1 ||
      hyper.window < 1 || hyper.negatives < 0 || hyper.epochs < 0 ||
      !(hyper.rho > 0.0))
    throw std::invalid_argument("deepwalk: invalid hyperparameters");

  const int V = graph.num_nodes();
  const int D = hyper.dim;
  MatS<float> table(D, V);
  {
    auto rng = make_rng(derive_seed(seed, 0xD1u));
    detail::fill_normal<float>(table, rng, 0.1);
  }
  MatS<float> acc = MatS<float>::Zero(D, V);
  const float rho = static_cast<float>(hyper.rho);
  const float eps = 1e-8f;

  VecS<float> gc(D);
  auto adagrad_col = [&](int node, const VecS<float>& g) {
    acc.col(node).array() += g.array().square();
    table.col(node).array() -=
        rho * g.array() / (acc.col(node).array() + eps).sqrt();
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    auto walks = sample_walk_set(graph, hyper.walks, hyper.walk_len,
                                 derive_seed(seed, 0xD2u, epoch));
    // Unigram^{3/4} over walk occurrences for negative sampling.
    std::vector<double> counts(V, 0.0);
    for (const auto& w : walks)
      for (HetNode v : w.nodes) counts[graph.packed(v)] += 1.0;
    for (double& c : counts) c = std::pow(c, 0.75);
    std::discrete_distribution<int> neg_dist(counts.begin(), counts.end());
    auto rng = make_rng(derive_seed(seed, 0xD3u, epoch));

    for (const auto& walk : walks) {
      for (const auto& win : extract_windows(walk, hyper.window)) {
        const int center = graph.packed(win.center);
        for (HetNode ctx_node : win.context) {
          const int ctx = graph.packed(ctx_node);
          gc.setZero();
          // positive pair: maximize log sigma(ctx . center)
          {
            double dot = static_cast<double>(
                table.col(ctx).dot(table.col(center)));
            float g = static_cast<float>(1.0 / (1.0 + std::exp(-dot)) - 1.0);
            gc += g * table.col(ctx);
            VecS<float> gx = g * table.col(center);
            adagrad_col(ctx, gx);
          }
          for (int m = 0; m < hyper.negatives; ++m) {
            int neg = neg_dist(rng);
            if (neg == ctx || neg == center) continue;
            double dot = static_cast<double>(
                table.col(neg).dot(table.col(center)));
            float g = static_cast<float>(1.0 / (1.0 + std::exp(-dot)));
            gc += g * table.col(neg);
            VecS<float> gn = g * table.col(center);
            adagrad_col(neg, gn);
          }
          adagrad_col(center, gc);
        }
      }
    }
  }
  return table;
}

DeepwalkIndex build_deepwalk_index(const Corpus& full,
                                   const std::vector<std::string>& candidates,
                                   const DeepwalkHyper& hyper,
                                   std::uint64_t seed) {
  HetGraph graph = build_graph(full);
  DeepwalkIndex index;
  index.table = deepwalk_train(graph, hyper, seed);
  for (size_t i = 0; i < full.questions.size(); ++i)
    index.question_node.emplace(full.questions[i].id, static_cast<int>(i));
  index.candidate_ids.reserve(candidates.size());
  for (const auto& id : candidates) {
    auto it = index.question_node.find(id);
    if (it == index.question_node.end())
      throw DataError("deepwalk index: candidate " + id +
                      " is not a graph question node");
    index.candidate_ids.push_back(id);
    index.candidate_rows.push_back(it->second);
  }
  return index;
}

RankedList deepwalk_rank(const DeepwalkIndex& index,
                         const std::string& query_id, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  auto it = index.question_node.find(query_id);
  if (it == index.question_node.end())
    throw DataError("deepwalk: query " + query_id +
                    " has no node in the embedding table");
  auto qv = index.table.col(it->second);
  RankedList out;
  out.reserve(index.candidate_ids.size());
  for (size_t i = 0; i < index.candidate_ids.size(); ++i) {
    if (index.candidate_ids[i] == query_id) continue;
    double s = static_cast<double>(
        index.table.col(index.candidate_rows[i]).dot(qv));
    out.push_back({index.candidate_ids[i], s});
  }
  sort_and_clip(out, k);
  return out;
}

}  // namespace hnil
