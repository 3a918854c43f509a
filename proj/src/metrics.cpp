#include "hnil/metrics.hpp"

#include <future>
#include <stdexcept>
#include <unordered_map>

#include "hnil/common.hpp"

namespace hnil {

RelevanceJudgments judgments_from_dup_groups(
    const Corpus& train, const std::vector<QuestionRecord>& queries) {
  std::unordered_map<std::string, std::vector<std::string>> groups;
  for (const auto& q : train.questions)
    if (q.dup_group) groups[*q.dup_group].push_back(q.id);

  RelevanceJudgments j;
  for (const auto& q : queries) {
    std::set<std::string> rel;
    if (q.dup_group) {
      auto it = groups.find(*q.dup_group);
      if (it != groups.end())
        for (const auto& id : it->second)
          if (id != q.id) rel.insert(id);
    }
    j.relevant.emplace(q.id, std::move(rel));
  }
  return j;
}

double average_precision(const RankedList& ranked,
                         const std::set<std::string>& relevant,
                         int n_total_relevant) {
  if (n_total_relevant < 1)
    throw std::invalid_argument(
        "average_precision: total relevant count must be >= 1");
  double sum = 0.0;
  int hits = 0;
  for (size_t j = 0; j < ranked.size(); ++j) {
    if (relevant.count(ranked[j].id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
  }
  return sum / n_total_relevant;
}

double precision_at_n(const RankedList& ranked,
                      const std::set<std::string>& relevant, int n) {
  if (n < 1) throw std::invalid_argument("precision_at_n: N must be >= 1");
  int hits = 0;
  for (size_t j = 0; j < ranked.size() && j < static_cast<size_t>(n); ++j)
    if (relevant.count(ranked[j].id)) ++hits;
  return static_cast<double>(hits) / n;
}

int first_relevant_rank(const RankedList& ranked,
                        const std::set<std::string>& relevant) {
  for (size_t j = 0; j < ranked.size(); ++j)
    if (relevant.count(ranked[j].id)) return static_cast<int>(j + 1);
  return 0;
}

double mean_average_precision(const std::vector<double>& per_query_ap) {
  if (per_query_ap.empty())
    throw std::invalid_argument("mean_average_precision: no queries");
  double s = 0.0;
  for (double ap : per_query_ap) s += ap;
  return s / per_query_ap.size();
}

double mean_reciprocal_rank(const std::vector<int>& first_ranks) {
  if (first_ranks.empty())
    throw std::invalid_argument("mean_reciprocal_rank: no queries");
  double s = 0.0;
  for (int r : first_ranks)
    if (r > 0) s += 1.0 / r;
  return s / first_ranks.size();
}

EvalReport evaluate(const RankerFn& ranker,
                    const std::vector<QuestionRecord>& queries,
                    const RelevanceJudgments& judgments, int k_eval,
                    int threads) {
  if (k_eval < 1) throw std::invalid_argument("evaluate: k_eval must be >= 1");

  // Work out which queries participate, preserving order.
  std::vector<const QuestionRecord*> active;
  EvalReport rep;
  for (const auto& q : queries) {
    auto it = judgments.relevant.find(q.id);
    if (it == judgments.relevant.end() || it->second.empty()) {
      ++rep.skipped_no_relevant;
      continue;
    }
    active.push_back(&q);
  }
  if (active.empty())
    throw DataError("evaluate: no query has a judged relevant question");

  std::vector<RankedList> lists(active.size());
  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) lists[i] = ranker(*active[i], k_eval);
  };
  if (threads <= 1 || active.size() < 2) {
    run_range(0, active.size());
  } else {
    size_t nt = std::min<size_t>(threads, active.size());
    size_t chunk = (active.size() + nt - 1) / nt;
    std::vector<std::future<void>> futs;
    for (size_t lo = 0; lo < active.size(); lo += chunk)
      futs.push_back(std::async(std::launch::async, run_range, lo,
                                std::min(lo + chunk, active.size())));
    for (auto& f : futs) f.get();
  }

  std::vector<double> aps;
  std::vector<int> ranks;
  double p1s = 0.0, p5s = 0.0;
  for (size_t i = 0; i < active.size(); ++i) {
    const auto& rel = judgments.relevant.at(active[i]->id);
    PerQueryMetrics m;
    m.id = active[i]->id;
    m.n_relevant = static_cast<int>(rel.size());
    m.ap = average_precision(lists[i], rel, m.n_relevant);
    m.p1 = precision_at_n(lists[i], rel, 1);
    m.p5 = precision_at_n(lists[i], rel, 5);
    m.first_rank = first_relevant_rank(lists[i], rel);
    m.rr = m.first_rank > 0 ? 1.0 / m.first_rank : 0.0;
    aps.push_back(m.ap);
    ranks.push_back(m.first_rank);
    p1s += m.p1;
    p5s += m.p5;
    rep.queries.push_back(std::move(m));
  }
  rep.evaluated = static_cast<int>(active.size());
  rep.map = mean_average_precision(aps);
  rep.p1 = p1s / rep.evaluated;
  rep.p5 = p5s / rep.evaluated;
  rep.mrr = mean_reciprocal_rank(ranks);
  return rep;
}

}  // namespace hnil
