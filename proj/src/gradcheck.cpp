#include "hnil/gradcheck.hpp"

#include <algorithm>

#include "hnil/training.hpp"

namespace hnil {

namespace {

// Small corpus with full vocabulary coverage: 16 questions over 4
// categories, `users` users with sparse random friendships.
Corpus gradcheck_corpus(const GradCheckConfig& cfg) {
  const int n_words = std::max(1, cfg.vocab - 1);
  const int n_questions = 16;
  auto rng = make_rng(derive_seed(cfg.seed, 0x6C1u));

  std::vector<RawUser> users(cfg.users);
  for (int u = 0; u < cfg.users; ++u)
    users[u].id = "u" + std::to_string(u);
  for (int a = 0; a < cfg.users; ++a)
    for (int b = a + 1; b < cfg.users; ++b)
      if (rng() % 100 < 15) users[a].friends.push_back(users[b].id);

  long slot = 0;
  auto next_word = [&] {
    long w = slot < n_words ? slot : static_cast<long>(rng() % n_words);
    ++slot;
    return "w" + std::to_string(w);
  };

  std::vector<QuestionRecord> questions(n_questions);
  for (int i = 0; i < n_questions; ++i) {
    auto& q = questions[i];
    q.id = "q" + std::to_string(i);
    q.category = "cat" + std::to_string(i % 4);
    q.asker = users[rng() % cfg.users].id;
    int n_sent = 1 + static_cast<int>(rng() % 2);
    for (int s = 0; s < n_sent; ++s) {
      int len = 4 + static_cast<int>(rng() % 3);
      for (int t = 0; t < len; ++t) {
        q.text += next_word();
        q.text += ' ';
      }
      q.text += ". ";
    }
  }
  return build_corpus(std::move(questions), std::move(users), 1);
}

}  // namespace

GradCheckResult run_gradcheck(const GradCheckConfig& cfg) {
  if (cfg.vocab < 2 || cfg.users < 1)
    throw std::invalid_argument("gradcheck: vocab must be >= 2, users >= 1");
  if (!(cfg.eps > 0.0))
    throw std::invalid_argument("gradcheck: eps must be > 0");

  Corpus corpus = gradcheck_corpus(cfg);
  HetGraph graph = build_graph(corpus);
  CategoryIndex ci = CategoryIndex::build(corpus);

  Hyper hyper;
  hyper.dims = cfg.dims;
  hyper.seed = cfg.seed;

  // The fixture loss must stay small: finite-difference noise at eps=1e-5
  // grows with the loss magnitude, and entries with near-zero gradients
  // compare against it through the 1e-6 denominator clamp. Scan windows in
  // walk order and keep just enough supervision to exercise every branch —
  // a few hinge pairs (trimmed per task) plus a couple of user pairs.
  std::vector<Window> all;
  for (const auto& walk :
       sample_walk_set(graph, 1, hyper.walk_len, derive_seed(cfg.seed, 0x6C2u)))
    for (auto& w : extract_windows(walk, hyper.window))
      all.push_back(std::move(w));

  constexpr long kMaxHingePairs = 3;
  constexpr size_t kMaxUserPairs = 2;
  BatchTasks tasks;
  long hinge_pairs = 0;
  auto rng = make_rng(derive_seed(cfg.seed, 0x6C3u));
  for (const Window& w : all) {
    if (hinge_pairs >= kMaxHingePairs &&
        tasks.user_pairs.size() >= kMaxUserPairs)
      break;
    BatchTasks one = materialize_batch(std::span(&w, 1), corpus, ci,
                                       hyper.num_neg, rng);
    for (auto& task : one.question_tasks) {
      if (hinge_pairs >= kMaxHingePairs) break;
      if (task.pairs.size() > 2) task.pairs.resize(2);
      hinge_pairs += static_cast<long>(task.pairs.size());
      tasks.question_tasks.push_back(std::move(task));
    }
    for (auto& pair : one.user_pairs) {
      if (tasks.user_pairs.size() >= kMaxUserPairs) break;
      tasks.user_pairs.push_back(pair);
    }
  }

  auto params = init_params<double>(cfg.dims, corpus.vocab.size(),
                                    static_cast<int>(corpus.users.size()),
                                    derive_seed(cfg.seed, 0x6C4u));
  auto grads = Grads<double>::like(params);
  backward(params, tasks, corpus, hyper, grads);
  if (cfg.perturb) grads.wx(0, 0) += 1e-3;

  struct Slot {
    const char* name;
    double* theta;
    const double* grad;
    long size;
  };
  const Slot slots[] = {
      {"word_emb", params.word_emb.data(), grads.word_emb.data(),
       params.word_emb.size()},
      {"user_emb", params.user_emb.data(), grads.user_emb.data(),
       params.user_emb.size()},
      {"wx", params.wx.data(), grads.wx.data(), params.wx.size()},
      {"wh", params.wh.data(), grads.wh.data(), params.wh.size()},
      {"vo", params.vo.data(), grads.vo.data(), params.vo.size()},
      {"bias", params.bias.data(), grads.bias.data(), params.bias.size()},
  };

  GradCheckResult res;
  res.loss = total_loss(params, tasks, corpus, hyper);
  for (const auto& slot : slots) {
    TensorCheck tc;
    tc.name = slot.name;
    for (long i = 0; i < slot.size; ++i) {
      const double orig = slot.theta[i];
      slot.theta[i] = orig + cfg.eps;
      double lp = total_loss(params, tasks, corpus, hyper);
      slot.theta[i] = orig - cfg.eps;
      double lm = total_loss(params, tasks, corpus, hyper);
      slot.theta[i] = orig;
      double fd = (lp - lm) / (2.0 * cfg.eps);
      double g = slot.grad[i];
      // The denominator floor sits just above the finite-difference noise
      // floor (~loss * 1e-16 / eps), so near-zero gradients are judged on
      // absolute agreement rather than on rounding noise.
      double rel =
          std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-5});
      tc.max_rel = std::max(tc.max_rel, rel);
      ++res.entries;
    }
    res.max_rel = std::max(res.max_rel, tc.max_rel);
    res.tensors.push_back(std::move(tc));
  }
  return res;
}

}  // namespace hnil
