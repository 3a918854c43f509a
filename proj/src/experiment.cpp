#include "hnil/experiment.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace hnil {

EvalSetup make_eval_setup(Corpus full, double train_frac,
                          std::uint64_t seed) {
  EvalSetup setup;
  setup.full = std::move(full);
  setup.split = train_test_split(setup.full, train_frac, seed);
  setup.judgments =
      judgments_from_dup_groups(setup.split.train, setup.split.test);
  return setup;
}

TrainedModel train_checkpoint(const Corpus& corpus, const Hyper& hyper) {
  auto result = train<float>(corpus, hyper);
  TrainedModel model;
  model.ckpt.params = std::move(result.params);
  model.ckpt.hyper = hyper;
  model.ckpt.vocab = corpus.vocab;
  model.ckpt.user_ids.reserve(corpus.users.size());
  for (const auto& u : corpus.users) model.ckpt.user_ids.push_back(u.id);
  model.report = std::move(result.report);
  return model;
}

std::vector<std::string> parse_rankers(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    if (std::find(known_rankers().begin(), known_rankers().end(), name) ==
        known_rankers().end())
      throw std::invalid_argument("unknown ranker: " + name);
    if (std::find(out.begin(), out.end(), name) == out.end())
      out.push_back(name);
  }
  if (out.empty()) throw std::invalid_argument("no rankers requested");
  return out;
}

EvalReport eval_vsm(const EvalSetup& setup, int k_eval, int threads) {
  TermStats stats = build_term_stats(setup.split.train.questions);
  return evaluate(
      [&](const QuestionRecord& q, int k) { return vsm_rank(stats, q, k); },
      setup.split.test, setup.judgments, k_eval, threads);
}

EvalReport eval_bm25(const EvalSetup& setup, int k_eval, int threads) {
  TermStats stats = build_term_stats(setup.split.train.questions);
  return evaluate(
      [&](const QuestionRecord& q, int k) { return bm25_rank(stats, q, k); },
      setup.split.test, setup.judgments, k_eval, threads);
}

EvalReport eval_deepwalk(const EvalSetup& setup, const DeepwalkHyper& hyper,
                         std::uint64_t seed, int k_eval, int threads) {
  std::vector<std::string> candidates;
  candidates.reserve(setup.split.train.questions.size());
  for (const auto& q : setup.split.train.questions)
    candidates.push_back(q.id);
  DeepwalkIndex index =
      build_deepwalk_index(setup.full, candidates, hyper, seed);
  return evaluate(
      [&](const QuestionRecord& q, int k) {
        return deepwalk_rank(index, q.id, k);
      },
      setup.split.test, setup.judgments, k_eval, threads);
}

EvalReport eval_hnil(const EvalSetup& setup, const Checkpoint& ckpt,
                     int k_eval, int threads) {
  HnilIndex index = build_hnil_index(ckpt, setup.split.train.questions);
  return evaluate(
      [&](const QuestionRecord& q, int k) {
        return hnil_rank(index, ckpt, q, k);
      },
      setup.split.test, setup.judgments, k_eval, threads);
}

std::vector<RankerReport> run_comparison(
    const EvalSetup& setup, const std::vector<std::string>& rankers,
    const Checkpoint* ckpt, const DeepwalkHyper& dw_hyper, std::uint64_t seed,
    int k_eval, int threads) {
  std::vector<RankerReport> out;
  for (const auto& name : rankers) {
    RankerReport rr;
    rr.ranker = name;
    if (name == "vsm") {
      rr.report = eval_vsm(setup, k_eval, threads);
    } else if (name == "bm25") {
      rr.report = eval_bm25(setup, k_eval, threads);
    } else if (name == "deepwalk") {
      rr.report = eval_deepwalk(setup, dw_hyper, seed, k_eval, threads);
    } else if (name == "hnil") {
      if (!ckpt)
        throw std::invalid_argument("hnil ranker requires a checkpoint");
      rr.report = eval_hnil(setup, *ckpt, k_eval, threads);
    } else {
      throw std::invalid_argument("unknown ranker: " + name);
    }
    out.push_back(std::move(rr));
  }
  return out;
}

nlohmann::json eval_report_json(const EvalReport& rep) {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : rep.queries)
    queries.push_back({{"id", q.id},
                       {"ap", q.ap},
                       {"p1", q.p1},
                       {"p5", q.p5},
                       {"rr", q.rr},
                       {"first_rank", q.first_rank},
                       {"n_relevant", q.n_relevant}});
  return nlohmann::json{{"map", rep.map},
                        {"p1", rep.p1},
                        {"p5", rep.p5},
                        {"mrr", rep.mrr},
                        {"evaluated", rep.evaluated},
                        {"skipped_no_relevant", rep.skipped_no_relevant},
                        {"queries", queries}};
}

nlohmann::json train_report_json(const TrainReport& rep) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : rep.iterations)
    iters.push_back({{"iter", it.iter},
                     {"hinge", it.hinge},
                     {"user", it.user},
                     {"reg", it.reg},
                     {"total", it.total},
                     {"windows", it.windows},
                     {"question_windows", it.question_windows},
                     {"windows_no_positive", it.windows_no_positive},
                     {"active_triplets", it.active_triplets},
                     {"batches", it.batches},
                     {"seconds", it.seconds}});
  return nlohmann::json{{"iterations", iters}, {"seconds", rep.seconds}};
}

nlohmann::json ranked_list_json(const RankedList& list) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : list)
    arr.push_back({{"id", e.id}, {"score", e.score}});
  return arr;
}

std::string comparison_table(const std::vector<RankerReport>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "ranker" << std::right << std::setw(9)
     << "MAP" << std::setw(9) << "P@1" << std::setw(9) << "P@5"
     << std::setw(9) << "MRR" << std::setw(8) << "n" << '\n';
  os << std::string(54, '-') << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.ranker << std::right << std::setw(9)
       << r.report.map << std::setw(9) << r.report.p1 << std::setw(9)
       << r.report.p5 << std::setw(9) << r.report.mrr << std::setw(8)
       << r.report.evaluated << '\n';
  }
  return os.str();
}

}  // namespace hnil
