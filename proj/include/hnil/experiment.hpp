#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnil/checkpoint.hpp"
#include "hnil/corpus.hpp"
#include "hnil/metrics.hpp"
#include "hnil/retrieval.hpp"
#include "hnil/training.hpp"

namespace hnil {

// Split + judgments bundle used by evaluation runs. `full` keeps the
// pre-split corpus for the transductive DeepWalk baseline.
struct EvalSetup {
  Corpus full;
  Split split;
  RelevanceJudgments judgments;
};

EvalSetup make_eval_setup(Corpus full, double train_frac, std::uint64_t seed);

struct TrainedModel {
  Checkpoint ckpt;
  TrainReport report;
};

TrainedModel train_checkpoint(const Corpus& corpus, const Hyper& hyper);

inline const std::vector<std::string>& known_rankers() {
  static const std::vector<std::string> names = {"vsm", "bm25", "deepwalk",
                                                 "hnil"};
  return names;
}
std::vector<std::string> parse_rankers(const std::string& csv);

EvalReport eval_vsm(const EvalSetup& setup, int k_eval, int threads);
EvalReport eval_bm25(const EvalSetup& setup, int k_eval, int threads);
EvalReport eval_deepwalk(const EvalSetup& setup, const DeepwalkHyper& hyper,
                         std::uint64_t seed, int k_eval, int threads);
EvalReport eval_hnil(const EvalSetup& setup, const Checkpoint& ckpt,
                     int k_eval, int threads);

struct RankerReport {
  std::string ranker;
  EvalReport report;
};

// Runs every requested ranker against the same setup. `ckpt` may be null
// when "hnil" is not requested; `seed` feeds the DeepWalk baseline.
std::vector<RankerReport> run_comparison(const EvalSetup& setup,
                                         const std::vector<std::string>& rankers,
                                         const Checkpoint* ckpt,
                                         const DeepwalkHyper& dw_hyper,
                                         std::uint64_t seed, int k_eval,
                                         int threads);

nlohmann::json eval_report_json(const EvalReport& rep);
nlohmann::json train_report_json(const TrainReport& rep);
nlohmann::json ranked_list_json(const RankedList& list);

// Aligned text table of ranker rows x metric columns.
std::string comparison_table(const std::vector<RankerReport>& rows);

}  // namespace hnil
