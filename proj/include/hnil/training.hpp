#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "hnil/corpus.hpp"
#include "hnil/encoder.hpp"
#include "hnil/hetnet.hpp"
#include "hnil/pretrain.hpp"

namespace hnil {

struct Hyper {
  // Radius 3 is the shortest window that can pair a question with one asked
  // by the asker's friend: the path runs question-asker-friend-question, and
  // questions only meet at distance 2 otherwise (through a shared asker or
  // category).
  int window = 3;         // skip-gram radius w
  int walk_len = 6;       // T
  int walks = 10;         // n, walks per vertex per iteration
  int m_iter = 5;         // outer iterations
  int num_neg = 2;        // K negatives per positive
  int batch_windows = 32; // mini-batch size in windows
  double margin = 0.5;
  double lambda = 1e-4;   // L2 weight
  double rho = 0.1;       // AdaGrad learning rate
  std::uint64_t seed = 1;
  bool freeze_words = false;
  bool score_norm = true;
  Dims dims;

  void validate() const {
    if (!(margin > 0.0 && margin < 1.0))
      throw std::invalid_argument("margin must lie strictly in (0,1)");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
    if (walk_len < 2) throw std::invalid_argument("walk length must be >= 2");
    if (window < 1) throw std::invalid_argument("window radius must be >= 1");
    if (walks < 1) throw std::invalid_argument("walks per vertex must be >= 1");
    if (m_iter < 0) throw std::invalid_argument("iterations must be >= 0");
    if (num_neg < 1) throw std::invalid_argument("negatives per positive must be >= 1");
    if (batch_windows < 1) throw std::invalid_argument("batch size must be >= 1");
    if (dims.d_w < 1 || dims.d_q < 1 || dims.d_u < 1)
      throw std::invalid_argument("embedding dimensions must be positive");
  }
};

// Question ordinals bucketed by category, for sampling negatives outside the
// anchor's category.
struct CategoryIndex {
  std::vector<std::vector<int>> by_category;
  int total = 0;

  static CategoryIndex build(const Corpus& corpus) {
    CategoryIndex ci;
    ci.by_category.resize(corpus.categories.size());
    for (size_t i = 0; i < corpus.questions.size(); ++i)
      ci.by_category[corpus.questions[i].category_ord].push_back(
          static_cast<int>(i));
    ci.total = static_cast<int>(corpus.questions.size());
    return ci;
  }
  bool has_outside(int cat) const {
    return total > static_cast<int>(by_category[cat].size());
  }
  int sample_outside(int cat, std::mt19937_64& rng) const {
    int outside = total - static_cast<int>(by_category[cat].size());
    std::uniform_int_distribution<int> pick(0, outside - 1);
    int r = pick(rng);
    for (size_t c = 0; c < by_category.size(); ++c) {
      if (static_cast<int>(c) == cat) continue;
      int sz = static_cast<int>(by_category[c].size());
      if (r < sz) return by_category[c][r];
      r -= sz;
    }
    throw std::logic_error("sample_outside: exhausted categories");
  }
};

struct Triplet {
  int anchor, positive, negative;  // question ordinals
};

// For a question-centered window: positives are context questions sharing
// the center's category or asked by the same user or one of their friends;
// negatives are the remaining context questions, padded up to K with global
// uniform draws from other categories (redrawn if socially tied). Triplets
// are the Cartesian product positives x negatives.
inline std::vector<Triplet> build_triplets(const Window& window,
                                           const Corpus& corpus,
                                           const CategoryIndex& ci, int K,
                                           std::mt19937_64& rng) {
  std::vector<Triplet> out;
  if (window.center.type != NodeType::Question) return out;
  const int anchor = window.center.ord;
  const int cat = corpus.questions[anchor].category_ord;
  const int asker = corpus.questions[anchor].asker_ord;

  auto tied = [&](int other) {
    const int oa = corpus.questions[other].asker_ord;
    if (oa < 0 || asker < 0) return false;
    if (oa == asker) return true;
    const auto& fr = corpus.users[asker].friends;
    return std::binary_search(fr.begin(), fr.end(), oa);
  };

  std::vector<int> positives, negatives;
  for (HetNode ctx : window.context) {
    if (ctx.type != NodeType::Question || ctx.ord == anchor) continue;
    if (corpus.questions[ctx.ord].category_ord == cat || tied(ctx.ord))
      positives.push_back(ctx.ord);
    else
      negatives.push_back(ctx.ord);
  }
  if (positives.empty()) return out;
  if (!ci.has_outside(cat)) return out;  // single category: no valid negative
  for (int tries = 0; static_cast<int>(negatives.size()) < K && tries < 8 * K;
       ++tries) {
    int cand = ci.sample_outside(cat, rng);
    if (!tied(cand)) negatives.push_back(cand);
  }
  if (negatives.empty()) return out;

  out.reserve(positives.size() * negatives.size());
  for (int p : positives)
    for (int n : negatives) out.push_back({anchor, p, n});
  return out;
}

// Convenience overload building the category buckets on the fly.
inline std::vector<Triplet> build_triplets(const Window& window,
                                           const Corpus& corpus, int K,
                                           std::mt19937_64& rng) {
  CategoryIndex ci = CategoryIndex::build(corpus);
  return build_triplets(window, corpus, ci, K, rng);
}

// Supervision extracted from one mini-batch of windows, materialized up
// front so repeated loss evaluations see identical sampling.
struct BatchTasks {
  struct QuestionTask {
    int anchor;
    std::vector<std::pair<int, int>> pairs;  // (positive, negative)
  };
  std::vector<QuestionTask> question_tasks;
  std::vector<std::pair<int, int>> user_pairs;  // (center, context) ordinals
  long windows = 0;
  long question_windows = 0;
  long windows_no_positive = 0;  // question centers with no usable context

  bool empty() const { return question_tasks.empty() && user_pairs.empty(); }
};

inline BatchTasks materialize_batch(std::span<const Window> windows,
                                    const Corpus& corpus,
                                    const CategoryIndex& ci, int K,
                                    std::mt19937_64& rng) {
  BatchTasks tasks;
  for (const Window& w : windows) {
    ++tasks.windows;
    if (w.center.type == NodeType::Question) {
      ++tasks.question_windows;
      auto triplets = build_triplets(w, corpus, ci, K, rng);
      if (triplets.empty()) {
        ++tasks.windows_no_positive;
        continue;
      }
      BatchTasks::QuestionTask task;
      task.anchor = w.center.ord;
      for (const Triplet& t : triplets)
        task.pairs.emplace_back(t.positive, t.negative);
      tasks.question_tasks.push_back(std::move(task));
    } else if (w.center.type == NodeType::User) {
      for (HetNode ctx : w.context)
        if (ctx.type == NodeType::User)
          tasks.user_pairs.emplace_back(w.center.ord, ctx.ord);
    }
    // category centers carry no loss of their own
  }
  return tasks;
}

struct LossBreakdown {
  double hinge = 0.0;
  double user = 0.0;
  double reg = 0.0;
  long active_triplets = 0;

  double total() const { return hinge + user + reg; }
};

// Hinge + user-proximity terms for one batch (no regularizer).
template <class S>
LossBreakdown batch_node_loss(const ModelParams<S>& params,
                              const BatchTasks& tasks, const Corpus& corpus,
                              const Hyper& hyper) {
  std::unordered_map<int, QuestionVec<S>> enc;
  auto encode = [&](int ord) -> const QuestionVec<S>& {
    auto it = enc.find(ord);
    if (it == enc.end())
      it = enc.emplace(ord, encode_question(params, corpus.questions[ord],
                                            true, hyper.score_norm))
               .first;
    return it->second;
  };

  LossBreakdown bd;
  for (const auto& task : tasks.question_tasks) {
    const auto& va = encode(task.anchor);
    for (auto [pos, neg] : task.pairs) {
      double viol = hyper.margin +
                    static_cast<double>(score(va, encode(neg))) -
                    static_cast<double>(score(va, encode(pos)));
      if (viol > 0.0) {
        bd.hinge += viol;
        ++bd.active_triplets;
      }
    }
  }
  for (auto [a, b] : tasks.user_pairs)
    bd.user += static_cast<double>(
        (params.user_emb.col(a) - params.user_emb.col(b)).norm());
  return bd;
}

// lambda * ||Theta||^2 over trainable tensors.
template <class S>
double l2_penalty(const ModelParams<S>& params, const Hyper& hyper) {
  double sq = params.user_emb.squaredNorm() + params.wx.squaredNorm() +
              params.wh.squaredNorm() + params.vo.squaredNorm() +
              params.bias.squaredNorm();
  if (!hyper.freeze_words) sq += params.word_emb.squaredNorm();
  return hyper.lambda * sq;
}

template <class S>
double total_loss(const ModelParams<S>& params, const BatchTasks& tasks,
                  const Corpus& corpus, const Hyper& hyper) {
  return batch_node_loss(params, tasks, corpus, hyper).total() +
         l2_penalty(params, hyper);
}

// Loss assigned to a single skip-gram window (excludes the regularizer):
// question centers pay ranking hinges, user centers pay embedding distance
// to user-type context, category centers pay nothing.
template <class S>
double node_loss(const ModelParams<S>& params, const Window& window,
                 const Corpus& corpus, const Hyper& hyper,
                 std::mt19937_64& rng) {
  CategoryIndex ci = CategoryIndex::build(corpus);
  auto tasks = materialize_batch(std::span(&window, 1), corpus, ci,
                                 hyper.num_neg, rng);
  return batch_node_loss(params, tasks, corpus, hyper).total();
}

template <class S>
double total_loss(const ModelParams<S>& params,
                  std::span<const Window> windows, const Corpus& corpus,
                  const Hyper& hyper, std::mt19937_64& rng) {
  CategoryIndex ci = CategoryIndex::build(corpus);
  auto tasks = materialize_batch(windows, corpus, ci, hyper.num_neg, rng);
  return total_loss(params, tasks, corpus, hyper);
}

// Full gradient of total_loss(tasks) into `grads` (assumed zeroed).
// Inactive hinges and exactly-coincident user embeddings contribute zero
// (subgradient at the kinks).
template <class S>
LossBreakdown backward(const ModelParams<S>& params, const BatchTasks& tasks,
                       const Corpus& corpus, const Hyper& hyper,
                       Grads<S>& grads) {
  std::unordered_map<int, QuestionTrace<S>> traces;
  std::unordered_map<int, VecS<S>> dvalue;
  auto encode = [&](int ord) -> const QuestionTrace<S>& {
    auto it = traces.find(ord);
    if (it == traces.end()) {
      it = traces
               .emplace(ord, encode_question_traced(
                                 params, corpus.questions[ord], true,
                                 hyper.score_norm))
               .first;
      dvalue.emplace(ord, VecS<S>::Zero(params.dims.question_dim()));
    }
    return it->second;
  };

  LossBreakdown bd;
  for (const auto& task : tasks.question_tasks) {
    const auto& ta = encode(task.anchor);
    for (auto [pos, neg] : task.pairs) {
      const auto& tp = encode(pos);
      const auto& tn = encode(neg);
      double viol = hyper.margin + static_cast<double>(ta.value.dot(tn.value)) -
                    static_cast<double>(ta.value.dot(tp.value));
      if (viol > 0.0) {
        bd.hinge += viol;
        ++bd.active_triplets;
        dvalue.at(task.anchor) += tn.value - tp.value;
        dvalue.at(pos) -= ta.value;
        dvalue.at(neg) += ta.value;
      }
    }
  }

  for (auto [a, b] : tasks.user_pairs) {
    VecS<S> d = params.user_emb.col(a) - params.user_emb.col(b);
    double nrm = static_cast<double>(d.norm());
    bd.user += nrm;
    if (nrm >= 1e-12) {
      VecS<S> g = d / static_cast<S>(nrm);
      grads.user_emb.col(a) += g;
      grads.user_emb.col(b) -= g;
    }
  }

  for (auto& [ord, dv] : dvalue) {
    if (dv.isZero(S(0))) continue;
    backprop_question(params, traces.at(ord), dv, grads, hyper.freeze_words);
  }

  // d/dTheta of lambda*||Theta||^2
  const S two_lambda = static_cast<S>(2.0 * hyper.lambda);
  if (hyper.lambda > 0.0) {
    grads.user_emb += two_lambda * params.user_emb;
    grads.wx += two_lambda * params.wx;
    grads.wh += two_lambda * params.wh;
    grads.vo += two_lambda * params.vo;
    grads.bias += two_lambda * params.bias;
    if (!hyper.freeze_words) grads.word_emb += two_lambda * params.word_emb;
  }
  bd.reg = l2_penalty(params, hyper);

  if (!std::isfinite(bd.total()))
    throw NumericalError("non-finite training loss");
  return bd;
}

template <class S>
struct AdaGradState {
  Grads<S> accum;
  long steps = 0;

  static AdaGradState like(const ModelParams<S>& p) {
    AdaGradState st;
    st.accum = Grads<S>::like(p);
    return st;
  }
};

// theta -= rho * g / sqrt(acc + 1e-8), acc += g^2, elementwise.
template <class S>
void adagrad_update(ModelParams<S>& params, const Grads<S>& grads,
                    AdaGradState<S>& state, double rho, bool freeze_words) {
  const S r = static_cast<S>(rho);
  const S eps = static_cast<S>(1e-8);
  auto upd = [&](auto& theta, const auto& g, auto& acc) {
    acc.array() += g.array().square();
    theta.array() -= r * g.array() / (acc.array() + eps).sqrt();
  };
  if (!freeze_words) upd(params.word_emb, grads.word_emb, state.accum.word_emb);
  upd(params.user_emb, grads.user_emb, state.accum.user_emb);
  upd(params.wx, grads.wx, state.accum.wx);
  upd(params.wh, grads.wh, state.accum.wh);
  upd(params.vo, grads.vo, state.accum.vo);
  upd(params.bias, grads.bias, state.accum.bias);
  ++state.steps;
}

// L2 pulls applied lazily: only columns already carrying a data gradient are
// regularized this batch. A full-table pull would hand AdaGrad a near-zero
// gradient whose first step is still a full rho-sized sign step, silently
// erasing every embedding the batch never touched.
template <class S>
void add_lazy_l2(Grads<S>& grads, const ModelParams<S>& params, double lambda,
                 bool freeze_words) {
  if (lambda <= 0.0) return;
  const S tl = static_cast<S>(2.0 * lambda);
  auto pull = [&](auto& g, const auto& p) {
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      if (!g.col(j).isZero(S(0))) g.col(j) += tl * p.col(j);
  };
  if (!freeze_words) pull(grads.word_emb, params.word_emb);
  pull(grads.user_emb, params.user_emb);
  pull(grads.wx, params.wx);
  pull(grads.wh, params.wh);
  pull(grads.vo, params.vo);
  pull(grads.bias, params.bias);
}

struct IterationStats {
  int iter = 0;
  double hinge = 0.0;
  double user = 0.0;
  double reg = 0.0;  // at end of iteration
  double total = 0.0;
  long windows = 0;
  long question_windows = 0;
  long windows_no_positive = 0;
  long active_triplets = 0;
  long batches = 0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<IterationStats> iterations;
  double seconds = 0.0;
};

template <class S>
struct TrainResult {
  ModelParams<S> params;
  TrainReport report;
};

// Model initialization for training: Gaussian LSTM weights and user
// embeddings, word embeddings warm-started by skip-gram over the corpus
// text. User geometry is left to the joint training, which builds it from
// walk co-occurrence and the friendship-proximity term.
template <class S>
ModelParams<S> init_model(const Corpus& corpus, const Hyper& hyper) {
  auto params = init_params<S>(hyper.dims, corpus.vocab.size(),
                               static_cast<int>(corpus.users.size()),
                               derive_seed(hyper.seed, 0x10u));
  constexpr S kWordInitScale = S(2);
  params.word_emb = kWordInitScale *
                    pretrain_word_vectors(corpus, hyper.dims.d_w,
                                          derive_seed(hyper.seed, 0x77u))
                        .template cast<S>();
  return params;
}

// Mini-batch AdaGrad over skip-gram windows of truncated random walks,
// re-walking the graph every outer iteration. Single-threaded and
// deterministic for a fixed (corpus, hyper) pair.
template <class S>
TrainResult<S> train(const Corpus& corpus, const Hyper& hyper) {
  hyper.validate();
  if (corpus.questions.empty()) throw DataError("corpus has no questions");
  if (corpus.users.empty()) throw DataError("corpus has no users");
  if (corpus.categories.size() < 2)
    throw DataError(
        "corpus has a single category; ranking supervision needs at least "
        "two");

  const HetGraph graph = build_graph(corpus);
  const CategoryIndex ci = CategoryIndex::build(corpus);
  Hyper data_hyper = hyper;
  data_hyper.lambda = 0.0;  // L2 is applied lazily per batch instead

  TrainResult<S> res;
  res.params = init_model<S>(corpus, hyper);
  auto state = AdaGradState<S>::like(res.params);
  auto grads = Grads<S>::like(res.params);

  const auto t0 = std::chrono::steady_clock::now();
  for (int iter = 0; iter < hyper.m_iter; ++iter) {
    const auto it0 = std::chrono::steady_clock::now();
    auto neg_rng = make_rng(derive_seed(hyper.seed, 0xE6u, iter));
    IterationStats stats;
    stats.iter = iter;

    std::vector<Window> buffer;
    buffer.reserve(hyper.batch_windows);
    auto process = [&](std::span<const Window> batch) {
      auto tasks =
          materialize_batch(batch, corpus, ci, hyper.num_neg, neg_rng);
      stats.windows += tasks.windows;
      stats.question_windows += tasks.question_windows;
      stats.windows_no_positive += tasks.windows_no_positive;
      if (tasks.empty()) return;  // nothing to learn from this batch
      grads.set_zero();
      LossBreakdown bd = backward(res.params, tasks, corpus, data_hyper, grads);
      add_lazy_l2(grads, res.params, hyper.lambda, hyper.freeze_words);
      adagrad_update(res.params, grads, state, hyper.rho, hyper.freeze_words);
      stats.hinge += bd.hinge;
      stats.user += bd.user;
      stats.active_triplets += bd.active_triplets;
      ++stats.batches;
    };

    for_each_walk(graph, hyper.walks, hyper.walk_len,
                  derive_seed(hyper.seed, 0x3Au, iter), [&](const Walk& walk) {
                    for (auto& w : extract_windows(walk, hyper.window)) {
                      buffer.push_back(std::move(w));
                      if (static_cast<int>(buffer.size()) ==
                          hyper.batch_windows) {
                        process(buffer);
                        buffer.clear();
                      }
                    }
                  });
    if (!buffer.empty()) {
      process(buffer);
      buffer.clear();
    }

    stats.reg = l2_penalty(res.params, hyper);
    stats.total = stats.hinge + stats.user + stats.reg;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - it0)
            .count();
    res.report.iterations.push_back(stats);
  }
  res.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

}  // namespace hnil
