#pragma once

#include <string>
#include <vector>

#include "hnil/corpus.hpp"
#include "hnil/encoder.hpp"
#include "hnil/training.hpp"

namespace hnil {

// A trained model plus everything needed to encode unseen questions:
// the tokenizer vocabulary and the user-id table for asker lookup.
struct Checkpoint {
  ModelParams<float> params;
  Hyper hyper;
  Vocab vocab;
  std::vector<std::string> user_ids;
};

// Binary format: magic "HNIL", u32 format version, u64 length-prefixed JSON
// metadata (dims, hyper, vocab, user ids), then raw little-endian float32
// tensors row-major in the order: word embeddings (one row per token), user
// embeddings (one row per user), W_i, W_c, W_f, W_o, G_i, G_c, G_f, G_o,
// V_o, b_i, b_c, b_f, b_o.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hnil
