#include "hnil/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace hnil {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'H', 'N', 'I', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_raw(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

// Tensors are declared row-major on disk. Embedding tables are stored
// in memory with one entity per column, so their raw column-major buffer
// already matches "one row per entity" on disk; square weights need an
// explicit transpose copy.
void write_colmajor_as_entity_rows(std::ofstream& out,
                                   const MatS<float>& m) {
  write_raw(out, m.data(), sizeof(float) * m.size());
}

template <class B>
void write_rowmajor(std::ofstream& out, const B& m) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tmp =
      m;
  write_raw(out, tmp.data(), sizeof(float) * tmp.size());
}

void read_raw(std::ifstream& in, void* p, size_t n, const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw DataError("truncated checkpoint while reading " + what);
}

void read_entity_rows(std::ifstream& in, MatS<float>& m,
                      const std::string& what) {
  read_raw(in, m.data(), sizeof(float) * m.size(), what);
}

template <class B>
void read_rowmajor(std::ifstream& in, B&& m, const std::string& what) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tmp(
      m.rows(), m.cols());
  read_raw(in, tmp.data(), sizeof(float) * tmp.size(), what);
  m = tmp;
}

json hyper_json(const Hyper& h) {
  return json{{"window", h.window},
              {"walk_len", h.walk_len},
              {"walks", h.walks},
              {"m_iter", h.m_iter},
              {"num_neg", h.num_neg},
              {"batch_windows", h.batch_windows},
              {"margin", h.margin},
              {"lambda", h.lambda},
              {"rho", h.rho},
              {"seed", h.seed},
              {"freeze_words", h.freeze_words},
              {"score_norm", h.score_norm}};
}

Hyper hyper_from_json(const json& j, const Dims& dims) {
  Hyper h;
  h.window = j.at("window").get<int>();
  h.walk_len = j.at("walk_len").get<int>();
  h.walks = j.at("walks").get<int>();
  h.m_iter = j.at("m_iter").get<int>();
  h.num_neg = j.at("num_neg").get<int>();
  h.batch_windows = j.at("batch_windows").get<int>();
  h.margin = j.at("margin").get<double>();
  h.lambda = j.at("lambda").get<double>();
  h.rho = j.at("rho").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.freeze_words = j.at("freeze_words").get<bool>();
  h.score_norm = j.at("score_norm").get<bool>();
  h.dims = dims;
  return h;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  json meta;
  meta["dims"] = {{"d_w", ckpt.params.dims.d_w},
                  {"d_q", ckpt.params.dims.d_q},
                  {"d_u", ckpt.params.dims.d_u}};
  meta["hyper"] = hyper_json(ckpt.hyper);
  meta["vocab"] = {{"tokens", ckpt.vocab.tokens},
                   {"min_count", ckpt.vocab.min_count}};
  meta["user_ids"] = ckpt.user_ids;
  const std::string meta_str = meta.dump();

  write_raw(out, kMagic, 4);
  std::uint32_t ver = kVersion;
  write_raw(out, &ver, sizeof(ver));
  std::uint64_t len = meta_str.size();
  write_raw(out, &len, sizeof(len));
  write_raw(out, meta_str.data(), meta_str.size());

  const auto& p = ckpt.params;
  write_colmajor_as_entity_rows(out, p.word_emb);
  write_colmajor_as_entity_rows(out, p.user_emb);
  for (int g = 0; g < 4; ++g) write_rowmajor(out, p.gate_wx(g));
  for (int g = 0; g < 4; ++g) write_rowmajor(out, p.gate_wh(g));
  write_rowmajor(out, p.vo);
  write_raw(out, p.bias.data(), sizeof(float) * p.bias.size());
  if (!out) throw DataError("failed while writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  char magic[4];
  read_raw(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path + ": bad checkpoint magic");
  std::uint32_t ver = 0;
  read_raw(in, &ver, sizeof(ver), "version");
  if (ver != kVersion)
    throw DataError(path + ": unsupported checkpoint version " +
                    std::to_string(ver));
  std::uint64_t len = 0;
  read_raw(in, &len, sizeof(len), "metadata length");
  std::string meta_str(len, '\0');
  read_raw(in, meta_str.data(), len, "metadata");

  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw DataError(path + ": corrupt checkpoint metadata (" + e.what() + ")");
  }

  Checkpoint ckpt;
  Dims dims;
  try {
    dims.d_w = meta.at("dims").at("d_w").get<int>();
    dims.d_q = meta.at("dims").at("d_q").get<int>();
    dims.d_u = meta.at("dims").at("d_u").get<int>();
    ckpt.hyper = hyper_from_json(meta.at("hyper"), dims);
    ckpt.vocab.tokens =
        meta.at("vocab").at("tokens").get<std::vector<std::string>>();
    ckpt.vocab.min_count = meta.at("vocab").at("min_count").get<int>();
    ckpt.user_ids = meta.at("user_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(path + ": incomplete checkpoint metadata (" + e.what() +
                    ")");
  }
  if (ckpt.vocab.tokens.empty() || ckpt.user_ids.empty())
    throw DataError(path + ": checkpoint declares empty vocab or user table");
  for (size_t i = 1; i < ckpt.vocab.tokens.size(); ++i)
    ckpt.vocab.index.emplace(ckpt.vocab.tokens[i], static_cast<int>(i));

  auto& p = ckpt.params;
  p.dims = dims;
  p.word_emb.resize(dims.d_w, ckpt.vocab.tokens.size());
  p.user_emb.resize(dims.d_u, ckpt.user_ids.size());
  p.wx.resize(4 * dims.d_q, dims.d_w);
  p.wh.resize(4 * dims.d_q, dims.d_q);
  p.vo.resize(dims.d_q, dims.d_q);
  p.bias.resize(4 * dims.d_q);

  read_entity_rows(in, p.word_emb, "word embeddings");
  read_entity_rows(in, p.user_emb, "user embeddings");
  for (int g = 0; g < 4; ++g) read_rowmajor(in, p.gate_wx(g), "wx");
  for (int g = 0; g < 4; ++g) read_rowmajor(in, p.gate_wh(g), "wh");
  read_rowmajor(in, p.vo, "vo");
  read_raw(in, p.bias.data(), sizeof(float) * p.bias.size(), "bias");

  char probe;
  if (in.read(&probe, 1); in.gcount() != 0)
    throw DataError(path + ": trailing bytes after checkpoint payload");
  return ckpt;
}

}  // namespace hnil
