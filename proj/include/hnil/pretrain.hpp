#pragma once

#include <cstdint>

#include "hnil/corpus.hpp"
#include "hnil/encoder.hpp"

namespace hnil {

// Warm starts for the trainable embedding tables. Training proper fine-tunes
// both (subject to freeze_words); the ranking loss alone has no repulsive
// term for users, so the cluster structure these provide is load-bearing.

// Skip-gram/negative-sampling word vectors trained on the corpus sentences
// (dim x |vocab|). The <unk> column keeps its random initialization.
MatS<float> pretrain_word_vectors(const Corpus& corpus, int dim,
                                  std::uint64_t seed, int window = 4,
                                  int epochs = 15, int negatives = 5,
                                  float rho = 0.1f);


}  // namespace hnil
