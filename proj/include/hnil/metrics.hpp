#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hnil/corpus.hpp"
#include "hnil/ranked.hpp"

namespace hnil {

// query question id -> ids of its relevant (same dup_group) train questions
struct RelevanceJudgments {
  std::map<std::string, std::set<std::string>> relevant;
};

RelevanceJudgments judgments_from_dup_groups(
    const Corpus& train, const std::vector<QuestionRecord>& queries);

// Average precision with the total-relevant normalizer, so relevants missing
// from a truncated list count against the score.
double average_precision(const RankedList& ranked,
                         const std::set<std::string>& relevant,
                         int n_total_relevant);

// Fraction of the top N that is relevant; short lists keep denominator N.
double precision_at_n(const RankedList& ranked,
                      const std::set<std::string>& relevant, int n);

// 1-based rank of the first relevant entry, 0 if none retrieved.
int first_relevant_rank(const RankedList& ranked,
                        const std::set<std::string>& relevant);

double mean_average_precision(const std::vector<double>& per_query_ap);

// ranks are 1-based; 0 (no relevant retrieved) contributes 0.
double mean_reciprocal_rank(const std::vector<int>& first_ranks);

struct PerQueryMetrics {
  std::string id;
  double ap = 0.0, p1 = 0.0, p5 = 0.0, rr = 0.0;
  int first_rank = 0;
  int n_relevant = 0;
};

struct EvalReport {
  double map = 0.0, p1 = 0.0, p5 = 0.0, mrr = 0.0;
  int evaluated = 0;
  int skipped_no_relevant = 0;  // queries without judged relevants
  std::vector<PerQueryMetrics> queries;
};

using RankerFn = std::function<RankedList(const QuestionRecord&, int)>;

// Runs the ranker per query at depth k_eval and aggregates. Queries without
// judged relevants are skipped (counted); aggregation follows query order.
// threads > 1 parallelizes the per-query ranker calls; aggregation order is
// unchanged.
EvalReport evaluate(const RankerFn& ranker,
                    const std::vector<QuestionRecord>& queries,
                    const RelevanceJudgments& judgments, int k_eval = 20,
                    int threads = 1);

}  // namespace hnil
