#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hnil {

// Sentence/token caps applied at tokenization time; they bound the cost of
// backpropagation through time for a single question.
inline constexpr int kMaxSentenceTokens = 64;
inline constexpr int kMaxSentences = 8;

struct QuestionRecord {
  std::string id;
  std::string text;
  std::string category;
  std::string asker;
  std::optional<std::string> dup_group;
  // resolved during corpus construction
  int category_ord = -1;
  int asker_ord = -1;
  std::vector<std::vector<int>> sentences;  // vocab indices per sentence

  bool operator==(const QuestionRecord&) const = default;
};

struct UserRecord {
  std::string id;
  std::vector<int> friends;  // user ordinals; symmetric, sorted, no self-loops

  bool operator==(const UserRecord&) const = default;
};

// Token inventory. Index 0 is reserved for unknown/below-threshold tokens and
// never maps back to a surface form; real tokens occupy indices >= 1 ordered
// by descending corpus frequency (ties broken lexicographically).
struct Vocab {
  std::vector<std::string> tokens;  // tokens[0] is the UNK sentinel
  std::unordered_map<std::string, int> index;
  int min_count = 1;

  int size() const { return static_cast<int>(tokens.size()); }
  int lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? 0 : it->second;
  }

  bool operator==(const Vocab& o) const {
    return tokens == o.tokens && min_count == o.min_count;
  }
};

struct Corpus {
  std::vector<QuestionRecord> questions;
  std::vector<UserRecord> users;
  std::vector<std::string> categories;  // sorted lexicographically
  Vocab vocab;
  std::unordered_map<std::string, int> user_index;      // user id -> ordinal
  std::unordered_map<std::string, int> question_index;  // question id -> ordinal

  bool operator==(const Corpus& o) const {
    return questions == o.questions && users == o.users &&
           categories == o.categories && vocab == o.vocab;
  }
};

// Splits text into sentences on '.', '?', '!' and sentences into lowercase
// tokens on whitespace, stripping non-alphanumeric edge punctuation. Empty
// sentences are dropped; output respects the sentence/token caps. An empty
// result signals empty tokenization; callers decide whether to reject.
std::vector<std::vector<std::string>> tokenize(const std::string& text);

// Raw user line as parsed from users.jsonl (friends still by id).
struct RawUser {
  std::string id;
  std::vector<std::string> friends;
};

// Shared construction path: validates records, builds the vocabulary,
// tokenizes questions, symmetrizes friendships and resolves ordinals.
Corpus build_corpus(std::vector<QuestionRecord> questions,
                    std::vector<RawUser> users, int min_count);

Corpus load_corpus(const std::string& questions_path,
                   const std::string& users_path, int min_count);

std::string questions_jsonl(const Corpus& corpus);
std::string users_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& questions_path,
                 const std::string& users_path);

struct SynthSpec {
  int num_topics = 5;
  int groups_per_topic = 10;
  int questions_per_group = 4;
  int users_per_topic_cluster = 6;
  double p_in = 0.002;    // intra-cluster friendship probability
  double p_out = 0.0002;  // inter-cluster friendship probability
  double q_align = 0.9;
  double lexical_overlap = 0.3;
};

Corpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

struct Split {
  Corpus train;
  std::vector<QuestionRecord> test;
};

// Removes a deterministic sample of questions into the test set. Questions
// whose duplicate peers would all leave the training side (or that have no
// duplicate peers at all) stay in train so every test query keeps at least
// one retrievable relevant.
Split train_test_split(const Corpus& corpus, double train_frac,
                       std::uint64_t seed);

}  // namespace hnil
