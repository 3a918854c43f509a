#include "hnil/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hnil/common.hpp"
#include "json.hpp"

namespace hnil {

namespace {

using json = nlohmann::json;

bool is_sentence_end(char c) { return c == '.' || c == '?' || c == '!'; }

// ASCII whitespace plus a handful of common unicode spaces; other multi-byte
// sequences pass through as token characters.
bool is_space_cp(std::uint32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
    case 0x00A0: case 0x2002: case 0x2003: case 0x2009: case 0x200B:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

bool is_word_cp(std::uint32_t cp) {
  if (cp < 128)
    return std::isalnum(static_cast<unsigned char>(cp)) != 0;
  return !is_space_cp(cp);  // non-ASCII treated as word material
}

// Minimal UTF-8 decoder; invalid bytes are kept as single opaque codepoints
// so malformed input degrades instead of crashing.
std::uint32_t decode_utf8(const std::string& s, size_t& i) {
  unsigned char b = s[i];
  if (b < 0x80) { i += 1; return b; }
  int extra = (b >= 0xF0) ? 3 : (b >= 0xE0) ? 2 : (b >= 0xC0) ? 1 : 0;
  if (extra == 0 || i + extra >= s.size()) { i += 1; return b; }
  std::uint32_t cp = b & (0x3F >> extra);
  for (int k = 1; k <= extra; ++k) {
    unsigned char cb = s[i + k];
    if ((cb & 0xC0) != 0x80) { i += 1; return b; }
    cp = (cp << 6) | (cb & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void append_cp(std::string& out, std::uint32_t cp, const std::string& src,
               size_t start, size_t end) {
  if (cp < 128) {
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(cp))));
  } else {
    out.append(src, start, end - start);
  }
}

// Strips leading/trailing codepoints that are neither alphanumeric nor
// non-ASCII, e.g. quotes, commas, parens. Interior punctuation survives.
std::string strip_edges(const std::string& token) {
  std::vector<std::pair<size_t, std::uint32_t>> cps;
  size_t i = 0;
  while (i < token.size()) {
    size_t at = i;
    cps.emplace_back(at, decode_utf8(token, i));
  }
  size_t lo = 0, hi = cps.size();
  while (lo < hi && !is_word_cp(cps[lo].second)) ++lo;
  while (hi > lo && !is_word_cp(cps[hi - 1].second)) --hi;
  if (lo == 0 && hi == cps.size()) return token;
  if (lo >= hi) return {};
  size_t from = cps[lo].first;
  size_t to = (hi < cps.size()) ? cps[hi].first : token.size();
  return token.substr(from, to - from);
}

}  // namespace

std::vector<std::vector<std::string>> tokenize(const std::string& text) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  std::string token;

  auto flush_token = [&] {
    if (token.empty()) return;
    std::string t = strip_edges(token);
    token.clear();
    if (t.empty()) return;
    if (static_cast<int>(current.size()) < kMaxSentenceTokens)
      current.push_back(std::move(t));
  };
  auto flush_sentence = [&] {
    flush_token();
    if (current.empty()) return;
    if (static_cast<int>(sentences.size()) < kMaxSentences)
      sentences.push_back(std::move(current));
    current.clear();
  };

  size_t i = 0;
  while (i < text.size()) {
    size_t start = i;
    std::uint32_t cp = decode_utf8(text, i);
    if (cp < 128 && is_sentence_end(static_cast<char>(cp))) {
      flush_sentence();
    } else if (is_space_cp(cp)) {
      flush_token();
    } else {
      append_cp(token, cp, text, start, i);
    }
  }
  flush_sentence();
  return sentences;
}

namespace {

Vocab build_vocab(const std::vector<std::vector<std::vector<std::string>>>&
                      question_tokens,
                  int min_count) {
  std::unordered_map<std::string, long> freq;
  for (const auto& q : question_tokens)
    for (const auto& sent : q)
      for (const auto& tok : sent) ++freq[tok];

  std::vector<std::pair<std::string, long>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq)
    if (n >= min_count) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab;
  vocab.min_count = min_count;
  vocab.tokens.reserve(kept.size() + 1);
  vocab.tokens.push_back("<unk>");  // sentinel; never produced by tokenize
  for (auto& [tok, n] : kept) {
    vocab.index.emplace(tok, static_cast<int>(vocab.tokens.size()));
    vocab.tokens.push_back(tok);
  }
  return vocab;
}

}  // namespace

Corpus build_corpus(std::vector<QuestionRecord> questions,
                    std::vector<RawUser> users, int min_count) {
  if (min_count < 1)
    throw std::invalid_argument("min_count must be >= 1");

  Corpus corpus;

  corpus.users.reserve(users.size());
  for (const auto& u : users) {
    if (u.id.empty()) throw DataError("user with empty id");
    if (!corpus.user_index
             .emplace(u.id, static_cast<int>(corpus.users.size()))
             .second)
      throw DataError("duplicate user id: " + u.id);
    corpus.users.push_back(UserRecord{u.id, {}});
  }
  // Symmetrize friendships: an edge listed on either side counts once.
  std::set<std::pair<int, int>> edges;
  for (size_t i = 0; i < users.size(); ++i) {
    for (const auto& fid : users[i].friends) {
      auto it = corpus.user_index.find(fid);
      if (it == corpus.user_index.end())
        throw DataError("user " + users[i].id + " lists unknown friend: " +
                        fid);
      int a = static_cast<int>(i), b = it->second;
      if (a == b) continue;  // self-loops dropped
      edges.emplace(std::min(a, b), std::max(a, b));
    }
  }
  for (auto [a, b] : edges) {
    corpus.users[a].friends.push_back(b);
    corpus.users[b].friends.push_back(a);
  }
  for (auto& u : corpus.users) std::sort(u.friends.begin(), u.friends.end());

  std::set<std::string> cats;
  std::vector<std::vector<std::vector<std::string>>> question_tokens;
  question_tokens.reserve(questions.size());
  for (auto& q : questions) {
    if (q.id.empty()) throw DataError("question with empty id");
    if (!corpus.question_index
             .emplace(q.id, static_cast<int>(question_tokens.size()))
             .second)
      throw DataError("duplicate question id: " + q.id);
    if (!corpus.user_index.count(q.asker))
      throw DataError("question " + q.id + " has unknown asker: " + q.asker);
    if (q.category.empty())
      throw DataError("question " + q.id + " has empty category");
    auto toks = tokenize(q.text);
    if (toks.empty())
      throw DataError("question " + q.id + " tokenizes to nothing");
    cats.insert(q.category);
    question_tokens.push_back(std::move(toks));
  }
  corpus.categories.assign(cats.begin(), cats.end());

  corpus.vocab = build_vocab(question_tokens, min_count);

  std::unordered_map<std::string, int> cat_ord;
  for (size_t i = 0; i < corpus.categories.size(); ++i)
    cat_ord.emplace(corpus.categories[i], static_cast<int>(i));

  corpus.questions = std::move(questions);
  for (size_t i = 0; i < corpus.questions.size(); ++i) {
    auto& q = corpus.questions[i];
    q.category_ord = cat_ord.at(q.category);
    q.asker_ord = corpus.user_index.at(q.asker);
    q.sentences.clear();
    for (const auto& sent : question_tokens[i]) {
      std::vector<int> ids;
      ids.reserve(sent.size());
      for (const auto& tok : sent) ids.push_back(corpus.vocab.lookup(tok));
      q.sentences.push_back(std::move(ids));
    }
  }
  return corpus;
}

namespace {

json parse_line(const std::string& path, long lineno, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(path + " line " + std::to_string(lineno) +
                    ": malformed JSON (" + e.what() + ")");
  }
}

std::string require_string(const json& j, const char* key,
                           const std::string& path, long lineno) {
  if (!j.contains(key) || !j[key].is_string())
    throw DataError(path + " line " + std::to_string(lineno) +
                    ": missing or non-string field '" + key + "'");
  return j[key].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& questions_path,
                   const std::string& users_path, int min_count) {
  std::ifstream uf(users_path);
  if (!uf) throw DataError("cannot open " + users_path);
  std::vector<RawUser> users;
  std::string line;
  long lineno = 0;
  while (std::getline(uf, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(users_path, lineno, line);
    RawUser u;
    u.id = require_string(j, "id", users_path, lineno);
    if (j.contains("friends")) {
      if (!j["friends"].is_array())
        throw DataError(users_path + " line " + std::to_string(lineno) +
                        ": 'friends' must be an array");
      for (const auto& f : j["friends"]) {
        if (!f.is_string())
          throw DataError(users_path + " line " + std::to_string(lineno) +
                          ": friend ids must be strings");
        u.friends.push_back(f.get<std::string>());
      }
    }
    users.push_back(std::move(u));
  }

  std::ifstream qf(questions_path);
  if (!qf) throw DataError("cannot open " + questions_path);
  std::vector<QuestionRecord> questions;
  lineno = 0;
  while (std::getline(qf, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(questions_path, lineno, line);
    QuestionRecord q;
    q.id = require_string(j, "id", questions_path, lineno);
    q.text = require_string(j, "text", questions_path, lineno);
    q.category = require_string(j, "category", questions_path, lineno);
    q.asker = require_string(j, "asker", questions_path, lineno);
    if (j.contains("dup_group") && !j["dup_group"].is_null()) {
      if (!j["dup_group"].is_string())
        throw DataError(questions_path + " line " + std::to_string(lineno) +
                        ": 'dup_group' must be a string or null");
      q.dup_group = j["dup_group"].get<std::string>();
    }
    questions.push_back(std::move(q));
  }

  return build_corpus(std::move(questions), std::move(users), min_count);
}

std::string questions_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& q : corpus.questions) {
    json j;
    j["id"] = q.id;
    j["text"] = q.text;
    j["category"] = q.category;
    j["asker"] = q.asker;
    if (q.dup_group)
      j["dup_group"] = *q.dup_group;
    else
      j["dup_group"] = nullptr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string users_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& u : corpus.users) {
    json j;
    j["id"] = u.id;
    json friends = json::array();
    for (int f : u.friends) friends.push_back(corpus.users[f].id);
    j["friends"] = friends;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::string& questions_path,
                 const std::string& users_path) {
  std::ofstream qf(questions_path, std::ios::binary);
  if (!qf) throw DataError("cannot write " + questions_path);
  qf << questions_jsonl(corpus);
  std::ofstream uf(users_path, std::ios::binary);
  if (!uf) throw DataError("cannot write " + users_path);
  uf << users_jsonl(corpus);
}

namespace {

std::string padded(const char* prefix, int n, int width) {
  std::string s = std::to_string(n);
  if (static_cast<int>(s.size()) < width)
    s.insert(0, width - s.size(), '0');
  return std::string(prefix) + s;
}

}  // namespace

Corpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.num_topics < 1 || spec.groups_per_topic < 1 ||
      spec.questions_per_group < 1 || spec.users_per_topic_cluster < 2)
    throw std::invalid_argument("synthetic corpus sizes must be positive "
                                "(and >= 2 users per cluster)");
  auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in01(spec.p_in) || !in01(spec.p_out) || !in01(spec.q_align) ||
      !in01(spec.lexical_overlap))
    throw std::invalid_argument("synthetic probabilities must lie in [0,1]");
  if (spec.p_in <= spec.p_out)
    throw std::invalid_argument(
        "p_in must exceed p_out: friendship clusters must be denser inside "
        "topics than across them");

  const int T = spec.num_topics;
  const int G = spec.groups_per_topic;
  const int Q = spec.questions_per_group;
  const int C = spec.users_per_topic_cluster;
  const int num_users = T * C;
  const int num_questions = T * G * Q;
  const int uw = static_cast<int>(std::to_string(num_users - 1).size());
  const int qw = static_cast<int>(std::to_string(num_questions - 1).size());

  auto rng = make_rng(derive_seed(seed, 0x5u));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<RawUser> users(num_users);
  for (int u = 0; u < num_users; ++u) users[u].id = padded("u", u, uw);

  // Friendships: Bernoulli per unordered pair, denser inside topic clusters.
  std::set<std::pair<int, int>> edges;
  for (int a = 0; a < num_users; ++a) {
    for (int b = a + 1; b < num_users; ++b) {
      double p = (a / C == b / C) ? spec.p_in : spec.p_out;
      if (unit(rng) < p) edges.emplace(a, b);
    }
  }

  // Token pools: a global background pool shared by every topic, plus a
  // per-group core set sampled from a shared concept universe. A question
  // draws each slot from its group core with probability lexical_overlap and
  // from the background pool otherwise. Half of each core set is copied from
  // a partner group in a different topic, so the same surface form recurs
  // with a different meaning elsewhere (polysemy): no token carries category
  // identity, bag-of-words matching is systematically led across topics, and
  // the collision is only resolvable through the asker side.
  constexpr int kCommonPool = 40;
  constexpr int kConceptUniverse = 60;
  constexpr int kCorePool = 8;
  constexpr int kCollisionShare = kCorePool / 4;

  std::vector<QuestionRecord> questions;
  questions.reserve(num_questions);
  std::vector<std::array<int, kCorePool>> group_cores;
  group_cores.reserve(static_cast<size_t>(T) * G);
  int qid = 0;
  for (int t = 0; t < T; ++t) {
    // Core tokens already claimed by an earlier group of the same committee:
    // when one committee owns several groups, those groups verbalize
    // distinct concepts, so their core sets stay disjoint.
    std::unordered_map<int, std::vector<int>> committee_used;
    for (int g = 0; g < G; ++g) {
      // Each duplicate group is owned by a two-user committee inside the
      // topic's cluster; committee members are forced friends so asker
      // identity carries a group-level signal through the network.
      int base = t * C;
      std::array<int, 2> committee{base + (2 * g) % C,
                                   base + (2 * g + 1) % C};
      if (committee[0] != committee[1])
        edges.emplace(std::min(committee[0], committee[1]),
                      std::max(committee[0], committee[1]));

      auto& used = committee_used[(2 * g) % C];
      std::array<int, kCorePool> core;
      int filled = 0;
      auto taken = [&](int w) {
        return std::find(core.begin(), core.begin() + filled, w) !=
                   core.begin() + filled ||
               std::find(used.begin(), used.end(), w) != used.end();
      };
      if (t > 0) {
        // Polysemous half: reuse core tokens from a random group of a
        // random earlier topic.
        const auto& partner = group_cores[rng() % (group_cores.size() - g)];
        for (int i = 0; filled < kCollisionShare && i < kCorePool; ++i)
          if (!taken(partner[i])) core[filled++] = partner[i];
      }
      while (filled < kCorePool) {
        int w = static_cast<int>(rng() % kConceptUniverse);
        if (!taken(w)) core[filled++] = w;
      }
      used.insert(used.end(), core.begin(), core.end());
      group_cores.push_back(core);

      for (int k = 0; k < Q; ++k) {
        QuestionRecord q;
        q.id = padded("q", qid++, qw);
        q.category = padded("topic", t, 1);
        q.dup_group = padded("t", t, 1) + padded("g", g, 1);

        int len = 8 + static_cast<int>(rng() % 5);
        std::vector<std::string> toks;
        toks.reserve(len);
        for (int s = 0; s < len; ++s) {
          if (unit(rng) < spec.lexical_overlap) {
            toks.push_back(padded("k", core[rng() % kCorePool], 1));
          } else {
            int w = static_cast<int>(rng() % kCommonPool);
            toks.push_back(padded("c", w, 1));
          }
        }
        std::string text;
        for (int s = 0; s < len; ++s) {
          text += toks[s];
          text += (s % 6 == 5 || s == len - 1) ? ". " : " ";
        }
        q.text = text;

        // Committee members take turns asking, so a group's questions are
        // spread evenly across both members rather than piling onto one.
        if (unit(rng) < spec.q_align)
          q.asker = users[committee[k % committee.size()]].id;
        else
          q.asker = users[rng() % num_users].id;
        questions.push_back(std::move(q));
      }
    }
  }

  for (auto [a, b] : edges) users[a].friends.push_back(users[b].id);

  return build_corpus(std::move(questions), std::move(users), 1);
}

Split train_test_split(const Corpus& corpus, double train_frac,
                       std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw std::invalid_argument("train_frac must lie strictly in (0,1)");
  const int n = static_cast<int>(corpus.questions.size());
  if (n < 2) throw DataError("need at least two questions to split");

  long n_train = std::lround(train_frac * n);
  n_train = std::clamp<long>(n_train, 1, n - 1);

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  auto rng = make_rng(derive_seed(seed, 0x51u));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> in_test(n, 0);
  for (int i = static_cast<int>(n_train); i < n; ++i) in_test[order[i]] = 1;

  // Group membership by dup_group for the coverage pass.
  std::unordered_map<std::string, std::vector<int>> groups;
  for (int i = 0; i < n; ++i)
    if (corpus.questions[i].dup_group)
      groups[*corpus.questions[i].dup_group].push_back(i);

  // A test question must keep at least one same-group peer in train;
  // otherwise it returns to train. Processing in shuffle order means that
  // when a whole group lands in test, early members returning to train
  // restore coverage for the rest.
  for (int i = static_cast<int>(n_train); i < n; ++i) {
    int q = order[i];
    const auto& rec = corpus.questions[q];
    bool covered = false;
    if (rec.dup_group) {
      for (int peer : groups[*rec.dup_group])
        if (peer != q && !in_test[peer]) { covered = true; break; }
    }
    if (!covered) in_test[q] = 0;
  }

  Split split;
  split.train = corpus;
  split.train.questions.clear();
  split.train.question_index.clear();
  for (int i = 0; i < n; ++i) {
    if (in_test[i]) {
      split.test.push_back(corpus.questions[i]);
    } else {
      split.train.question_index.emplace(
          corpus.questions[i].id,
          static_cast<int>(split.train.questions.size()));
      split.train.questions.push_back(corpus.questions[i]);
    }
  }
  if (split.train.questions.empty())
    throw DataError("train split is empty");
  return split;
}

}  // namespace hnil
