#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hnil/checkpoint.hpp"
#include "hnil/corpus.hpp"
#include "hnil/encoder.hpp"
#include "hnil/hetnet.hpp"
#include "hnil/ranked.hpp"

namespace hnil {

// ---------------------------------------------------------------- lexical

// Sparse per-document term counts shared by VSM and BM25. Term ids are
// vocabulary indices; the unknown-token index is excluded so out-of-vocab
// words can never match each other.
struct TermStats {
  std::vector<std::string> ids;
  std::vector<std::vector<std::pair<int, int>>> docs;  // sorted (term, tf)
  std::vector<int> doc_len;
  std::unordered_map<int, int> df;
  double avgdl = 0.0;

  int num_docs() const { return static_cast<int>(ids.size()); }
};

TermStats build_term_stats(const std::vector<QuestionRecord>& questions);

// tf-idf cosine: tf raw count, idf = ln(N/df). Query terms absent from every
// document are dropped. Excludes the query's own id from the ranking.
RankedList vsm_rank(const TermStats& stats, const QuestionRecord& query,
                    int k);

// Okapi BM25, k1=1.2, b=0.75, idf = ln((N-df+0.5)/(df+0.5)+1); query-side
// term multiplicity acts as a plain multiplier.
RankedList bm25_rank(const TermStats& stats, const QuestionRecord& query,
                     int k);

// ------------------------------------------------------------------ hnil

// Dense index over encoded train questions (asker always known for indexed
// questions). Questions are re-tokenized against the checkpoint vocabulary,
// so the index is independent of the serving corpus's own vocab.
struct HnilIndex {
  std::vector<std::string> ids;
  MatS<float> vectors;  // question_dim x n, one column per question
  bool normalized = true;
};

HnilIndex build_hnil_index(const Checkpoint& ckpt,
                           const std::vector<QuestionRecord>& questions);

// Encodes free text through the checkpoint's vocab/user table. Unknown or
// empty asker id -> zero user part.
QuestionVec<float> encode_with_checkpoint(const Checkpoint& ckpt,
                                          const std::string& text,
                                          const std::string& asker_id,
                                          const std::string& label);

RankedList hnil_rank(const HnilIndex& index, const QuestionVec<float>& query,
                     const std::string& exclude_id, int k);

// Convenience: encode a record (raw text + asker id) and rank it.
RankedList hnil_rank(const HnilIndex& index, const Checkpoint& ckpt,
                     const QuestionRecord& query, int k);

// -------------------------------------------------------------- deepwalk

struct DeepwalkHyper {
  int window = 2;
  int walk_len = 6;
  int walks = 10;
  int dim = 200;
  int epochs = 5;
  int negatives = 5;
  double rho = 0.1;
};

// Skip-gram with negative sampling over walks on the full graph; negatives
// come from the walk-occurrence unigram distribution raised to 3/4. Returns
// dim x num_nodes (packed node order).
MatS<float> deepwalk_train(const HetGraph& graph, const DeepwalkHyper& hyper,
                           std::uint64_t seed);

// Transductive baseline: the full corpus (train + test questions) forms the
// graph, so queries are looked up as nodes; only candidate ids are ranked.
struct DeepwalkIndex {
  MatS<float> table;  // dim x num_nodes
  std::vector<std::string> candidate_ids;
  std::vector<int> candidate_rows;
  std::unordered_map<std::string, int> question_node;  // id -> packed row
};

DeepwalkIndex build_deepwalk_index(const Corpus& full,
                                   const std::vector<std::string>& candidates,
                                   const DeepwalkHyper& hyper,
                                   std::uint64_t seed);

RankedList deepwalk_rank(const DeepwalkIndex& index,
                         const std::string& query_id, int k);

}  // namespace hnil
