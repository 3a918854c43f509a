#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hnil/common.hpp"
#include "hnil/corpus.hpp"

namespace hnil {

template <class S>
using MatS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecS = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct Dims {
  int d_w = 100;  // word embedding size
  int d_q = 100;  // LSTM hidden size (question text part)
  int d_u = 100;  // user embedding size

  int question_dim() const { return d_q + d_u; }
  bool operator==(const Dims&) const = default;
};

// All trainable state. Embedding tables keep one entity per column so
// lookups are contiguous; the four LSTM gates are stacked row-wise in the
// order input, candidate, forget, output, so a single product against wx/wh
// covers all gates at once.
template <class S>
struct ModelParams {
  Dims dims;
  MatS<S> word_emb;  // d_w x |vocab|, column 0 = unknown token
  MatS<S> user_emb;  // d_u x |users|
  MatS<S> wx;        // 4 d_q x d_w
  MatS<S> wh;        // 4 d_q x d_q
  MatS<S> vo;        // d_q x d_q, cell-to-output-gate
  VecS<S> bias;      // 4 d_q

  int vocab_size() const { return static_cast<int>(word_emb.cols()); }
  int num_users() const { return static_cast<int>(user_emb.cols()); }

  auto gate_wx(int g) { return wx.middleRows(g * dims.d_q, dims.d_q); }
  auto gate_wx(int g) const { return wx.middleRows(g * dims.d_q, dims.d_q); }
  auto gate_wh(int g) { return wh.middleRows(g * dims.d_q, dims.d_q); }
  auto gate_wh(int g) const { return wh.middleRows(g * dims.d_q, dims.d_q); }
  auto gate_bias(int g) { return bias.segment(g * dims.d_q, dims.d_q); }
  auto gate_bias(int g) const { return bias.segment(g * dims.d_q, dims.d_q); }
};

enum Gate { kGateInput = 0, kGateCandidate = 1, kGateForget = 2, kGateOutput = 3 };

namespace detail {

template <class S, class M>
void fill_normal(M&& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<S>(dist(rng));
}

}  // namespace detail

// Gaussian init (stddev 0.1) in a fixed tensor order; forget bias starts at
// one so early training does not wash out cell state.
template <class S>
ModelParams<S> init_params(const Dims& dims, int vocab_size, int num_users,
                           std::uint64_t seed) {
  if (dims.d_w < 1 || dims.d_q < 1 || dims.d_u < 1)
    throw std::invalid_argument("embedding dimensions must be positive");
  if (vocab_size < 1 || num_users < 1)
    throw std::invalid_argument("vocab and user table sizes must be positive");

  ModelParams<S> p;
  p.dims = dims;
  p.word_emb.resize(dims.d_w, vocab_size);
  p.user_emb.resize(dims.d_u, num_users);
  p.wx.resize(4 * dims.d_q, dims.d_w);
  p.wh.resize(4 * dims.d_q, dims.d_q);
  p.vo.resize(dims.d_q, dims.d_q);
  p.bias.resize(4 * dims.d_q);

  auto rng = make_rng(derive_seed(seed, 0x1Du));
  detail::fill_normal<S>(p.word_emb, rng, 0.1);
  detail::fill_normal<S>(p.user_emb, rng, 0.1);
  for (int g = 0; g < 4; ++g) detail::fill_normal<S>(p.gate_wx(g), rng, 0.1);
  for (int g = 0; g < 4; ++g) detail::fill_normal<S>(p.gate_wh(g), rng, 0.1);
  detail::fill_normal<S>(p.vo, rng, 0.1);
  p.bias.setZero();
  p.gate_bias(kGateForget).setOnes();
  return p;
}

struct W2vCoverage {
  int matched = 0;
  int vocab_tokens = 0;  // real tokens, excluding the unknown sentinel
  double fraction = 0.0;
};

// Text word2vec format: header "count dim", one "token v1 .. vdim" per line.
// Vectors for tokens present in the vocabulary replace their init columns.
template <class S>
W2vCoverage load_word2vec(ModelParams<S>& params, const std::string& path,
                          const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  long count = 0;
  int dim = 0;
  if (!(in >> count >> dim))
    throw DataError(path + ": malformed word2vec header");
  if (dim != params.dims.d_w)
    throw DataError(path + ": vector size " + std::to_string(dim) +
                    " does not match word embedding size " +
                    std::to_string(params.dims.d_w));
  W2vCoverage cov;
  cov.vocab_tokens = static_cast<int>(vocab.tokens.size()) - 1;
  std::unordered_set<int> seen;
  std::string token;
  std::vector<double> buf(dim);
  for (long i = 0; i < count && (in >> token); ++i) {
    for (int d = 0; d < dim; ++d)
      if (!(in >> buf[d]))
        throw DataError(path + ": truncated vector for token " + token);
    int idx = vocab.lookup(token);
    if (idx == 0) continue;
    for (int d = 0; d < dim; ++d)
      params.word_emb(d, idx) = static_cast<S>(buf[d]);
    seen.insert(idx);
  }
  cov.matched = static_cast<int>(seen.size());
  cov.fraction =
      cov.vocab_tokens > 0 ? double(cov.matched) / cov.vocab_tokens : 0.0;
  return cov;
}

template <class S>
struct LstmState {
  VecS<S> h, c;

  static LstmState zero(int d_q) {
    LstmState s;
    s.h = VecS<S>::Zero(d_q);
    s.c = VecS<S>::Zero(d_q);
    return s;
  }
};

namespace detail {

// Shared gate math. `pre` holds wx*x + wh*h_prev + bias on entry; outputs
// are written into the caller's columns so the traced encoder and the
// single-step op run identical code.
template <class S, class C, class O>
void gates_from_pre(const ModelParams<S>& p, VecS<S>& pre, const C& c_prev,
                    O i, O ch, O f, O o, O cell, O tcell, O h) {
  const int dq = p.dims.d_q;
  i = pre.segment(kGateInput * dq, dq).array().logistic();
  ch = pre.segment(kGateCandidate * dq, dq).array().tanh();
  f = pre.segment(kGateForget * dq, dq).array().logistic();
  cell = (i.array() * ch.array() + f.array() * c_prev.array()).matrix();
  pre.segment(kGateOutput * dq, dq).noalias() += p.vo * cell;
  o = pre.segment(kGateOutput * dq, dq).array().logistic();
  tcell = cell.array().tanh();
  h = (o.array() * tcell.array()).matrix();
}

}  // namespace detail

template <class S>
LstmState<S> lstm_step(const ModelParams<S>& params, const VecS<S>& x,
                       const LstmState<S>& prev) {
  const int dq = params.dims.d_q;
  if (x.size() != params.dims.d_w || prev.h.size() != dq ||
      prev.c.size() != dq)
    throw std::invalid_argument("lstm_step: input/state size mismatch");
  MatS<S> cols(dq, 7);
  VecS<S> pre(4 * dq);
  pre.noalias() = params.wx * x;
  pre.noalias() += params.wh * prev.h;
  pre += params.bias;
  detail::gates_from_pre<S>(params, pre, prev.c, cols.col(0), cols.col(1),
                            cols.col(2), cols.col(3), cols.col(4), cols.col(5),
                            cols.col(6));
  static const char* names[] = {"input",  "candidate", "forget", "output",
                                "cell",   "tanh-cell", "hidden"};
  for (int k = 0; k < 7; ++k)
    if (!cols.col(k).allFinite())
      throw NumericalError(std::string("non-finite ") + names[k] +
                           " activation in lstm step");
  LstmState<S> next;
  next.c = cols.col(4);
  next.h = cols.col(6);
  return next;
}

// Everything the backward pass needs from one sentence's forward run.
template <class S>
struct SentenceTrace {
  std::vector<int> tokens;
  MatS<S> xs;              // gathered word vectors, d_w x len
  MatS<S> gi, gc, gf, go;  // gate activations, d_q x len
  MatS<S> cells, tcells;   // cell state and its tanh
  MatS<S> hs;              // hidden states
};

template <class S>
SentenceTrace<S> encode_sentence_traced(const ModelParams<S>& params,
                                        std::span<const int> tokens) {
  if (tokens.empty())
    throw std::invalid_argument("cannot encode an empty sentence");
  const int dq = params.dims.d_q;
  const int n = static_cast<int>(tokens.size());
  SentenceTrace<S> tr;
  tr.tokens.assign(tokens.begin(), tokens.end());
  tr.xs.resize(params.dims.d_w, n);
  tr.gi.resize(dq, n); tr.gc.resize(dq, n); tr.gf.resize(dq, n);
  tr.go.resize(dq, n); tr.cells.resize(dq, n); tr.tcells.resize(dq, n);
  tr.hs.resize(dq, n);

  for (int t = 0; t < n; ++t) {
    int tok = tokens[t];
    if (tok < 0 || tok >= params.vocab_size())
      throw std::invalid_argument("token index out of vocabulary range");
    tr.xs.col(t) = params.word_emb.col(tok);
  }
  // Input transform for the whole sentence in one product; the recurrence
  // below adds the hidden-state and bias terms per step.
  MatS<S> pre_all(4 * dq, n);
  pre_all.noalias() = params.wx * tr.xs;

  MatS<S> zero = MatS<S>::Zero(dq, 1);
  VecS<S> pre(4 * dq);
  for (int t = 0; t < n; ++t) {
    pre = pre_all.col(t);
    if (t > 0) pre.noalias() += params.wh * tr.hs.col(t - 1);
    pre += params.bias;
    detail::gates_from_pre<S>(
        params, pre, t > 0 ? tr.cells.col(t - 1) : zero.col(0), tr.gi.col(t),
        tr.gc.col(t), tr.gf.col(t), tr.go.col(t), tr.cells.col(t),
        tr.tcells.col(t), tr.hs.col(t));
  }
  if (!tr.hs.col(n - 1).allFinite())
    throw NumericalError("non-finite hidden state while encoding sentence");
  return tr;
}

// Final hidden state of a left-to-right pass over the sentence.
template <class S>
VecS<S> encode_sentence(const ModelParams<S>& params,
                        std::span<const int> tokens) {
  auto tr = encode_sentence_traced(params, tokens);
  return tr.hs.col(tr.hs.cols() - 1);
}

template <class S>
struct QuestionVec {
  VecS<S> v;
  bool normalized = false;
};

template <class S>
struct QuestionTrace {
  std::vector<SentenceTrace<S>> sentences;
  std::vector<int> argmax;  // winning sentence per pooled component
  VecS<S> pooled;           // d_q
  VecS<S> value;            // final (possibly normalized) vector
  S norm = S(0);            // pre-normalization norm (0 when degenerate)
  int asker_ord = -1;       // -1 encodes an unknown asker
  bool normalized = false;
};

// Encodes each sentence with the LSTM, max-pools the final hidden states
// (ties keep the earliest sentence), appends the asker embedding (zeros when
// unknown) and optionally L2-normalizes.
template <class S>
QuestionTrace<S> encode_question_traced(const ModelParams<S>& params,
                                        const QuestionRecord& q,
                                        bool asker_known, bool normalize) {
  if (q.sentences.empty())
    throw DataError("question " + q.id + " has no tokenized sentences");
  const int dq = params.dims.d_q;
  const int du = params.dims.d_u;

  QuestionTrace<S> tr;
  tr.sentences.reserve(q.sentences.size());
  for (const auto& sent : q.sentences)
    tr.sentences.push_back(encode_sentence_traced(params, sent));

  tr.pooled = tr.sentences[0].hs.col(tr.sentences[0].hs.cols() - 1);
  tr.argmax.assign(dq, 0);
  for (size_t s = 1; s < tr.sentences.size(); ++s) {
    const auto& hs = tr.sentences[s].hs;
    auto h = hs.col(hs.cols() - 1);
    for (int j = 0; j < dq; ++j) {
      if (h(j) > tr.pooled(j)) {  // strict: ties keep the earliest sentence
        tr.pooled(j) = h(j);
        tr.argmax[j] = static_cast<int>(s);
      }
    }
  }

  tr.asker_ord =
      (asker_known && q.asker_ord >= 0 && q.asker_ord < params.num_users())
          ? q.asker_ord
          : -1;
  VecS<S> concat(dq + du);
  concat.head(dq) = tr.pooled;
  if (tr.asker_ord >= 0)
    concat.tail(du) = params.user_emb.col(tr.asker_ord);
  else
    concat.tail(du).setZero();

  if (normalize) {
    S n = concat.norm();
    if (n > S(1e-12)) {
      tr.value = concat / n;
      tr.norm = n;
    } else {
      tr.value = std::move(concat);  // zero vector stays zero
      tr.norm = S(0);
    }
    tr.normalized = true;
  } else {
    tr.value = std::move(concat);
    tr.norm = S(0);
    tr.normalized = false;
  }
  return tr;
}

template <class S>
QuestionVec<S> encode_question(const ModelParams<S>& params,
                               const QuestionRecord& q, bool asker_known,
                               bool normalize) {
  auto tr = encode_question_traced(params, q, asker_known, normalize);
  return {std::move(tr.value), tr.normalized};
}

// Match score is a plain dot product; with normalization on this is cosine.
template <class S>
S score(const QuestionVec<S>& a, const QuestionVec<S>& b) {
  if (a.v.size() != b.v.size())
    throw std::invalid_argument("score: question vector sizes differ");
  return a.v.dot(b.v);
}

// Gradient accumulator mirroring ModelParams.
template <class S>
struct Grads {
  MatS<S> word_emb, user_emb, wx, wh, vo;
  VecS<S> bias;

  static Grads like(const ModelParams<S>& p) {
    Grads g;
    g.word_emb = MatS<S>::Zero(p.word_emb.rows(), p.word_emb.cols());
    g.user_emb = MatS<S>::Zero(p.user_emb.rows(), p.user_emb.cols());
    g.wx = MatS<S>::Zero(p.wx.rows(), p.wx.cols());
    g.wh = MatS<S>::Zero(p.wh.rows(), p.wh.cols());
    g.vo = MatS<S>::Zero(p.vo.rows(), p.vo.cols());
    g.bias = VecS<S>::Zero(p.bias.size());
    return g;
  }
  void set_zero() {
    word_emb.setZero(); user_emb.setZero(); wx.setZero();
    wh.setZero(); vo.setZero(); bias.setZero();
  }
};

// Backpropagates d(loss)/d(value) through normalization, pooling and the
// LSTM recurrence, accumulating into `grads`. The output gate contributes a
// vo-transpose term to the cell gradient because o_t reads the current cell.
// Weight gradients are formed as sentence-level products of the stacked
// per-step pre-activation gradients.
template <class S>
void backprop_question(const ModelParams<S>& params,
                       const QuestionTrace<S>& tr, const VecS<S>& dvalue,
                       Grads<S>& grads, bool freeze_words) {
  const int dq = params.dims.d_q;
  const int du = params.dims.d_u;

  VecS<S> dconcat;
  if (tr.normalized) {
    if (tr.norm == S(0)) return;  // degenerate zero vector: no gradient
    S proj = dvalue.dot(tr.value);
    dconcat = (dvalue - proj * tr.value) / tr.norm;
  } else {
    dconcat = dvalue;
  }

  if (tr.asker_ord >= 0) grads.user_emb.col(tr.asker_ord) += dconcat.tail(du);

  // Route pooled gradient to each component's winning sentence.
  std::vector<VecS<S>> dh_final(tr.sentences.size());
  std::vector<char> touched(tr.sentences.size(), 0);
  for (int j = 0; j < dq; ++j) {
    S g = dconcat(j);
    if (g == S(0)) continue;
    int s = tr.argmax[j];
    if (!touched[s]) {
      dh_final[s] = VecS<S>::Zero(dq);
      touched[s] = 1;
    }
    dh_final[s](j) += g;
  }

  VecS<S> dh(dq), dc(dq), tmp(dq);
  for (size_t s = 0; s < tr.sentences.size(); ++s) {
    if (!touched[s]) continue;
    const auto& st = tr.sentences[s];
    const int n = static_cast<int>(st.tokens.size());
    MatS<S> dpre(4 * dq, n);
    dh = dh_final[s];
    dc.setZero();
    for (int t = n - 1; t >= 0; --t) {
      auto i = st.gi.col(t), ch = st.gc.col(t), f = st.gf.col(t),
           o = st.go.col(t), tc = st.tcells.col(t);
      auto dpre_i = dpre.col(t).segment(kGateInput * dq, dq);
      auto dpre_c = dpre.col(t).segment(kGateCandidate * dq, dq);
      auto dpre_f = dpre.col(t).segment(kGateForget * dq, dq);
      auto dpre_o = dpre.col(t).segment(kGateOutput * dq, dq);

      dpre_o =
          (dh.array() * tc.array() * o.array() * (S(1) - o.array())).matrix();
      dc.array() += dh.array() * o.array() * (S(1) - tc.array().square());
      dc.noalias() += params.vo.transpose() * dpre_o;

      dpre_i =
          (dc.array() * ch.array() * i.array() * (S(1) - i.array())).matrix();
      dpre_c = (dc.array() * i.array() * (S(1) - ch.array().square())).matrix();
      if (t > 0) {
        dpre_f = (dc.array() * st.cells.col(t - 1).array() * f.array() *
                  (S(1) - f.array()))
                     .matrix();
      } else {
        dpre_f.setZero();  // c_{-1} = 0
      }

      if (t > 0) {
        tmp.noalias() = params.wh.transpose() * dpre.col(t);
        dc.array() *= f.array();  // carry into c_{t-1}
        dh = tmp;
      }
    }

    grads.wx.noalias() += dpre * st.xs.transpose();
    if (n > 1)
      grads.wh.noalias() +=
          dpre.rightCols(n - 1) * st.hs.leftCols(n - 1).transpose();
    grads.bias += dpre.rowwise().sum();
    grads.vo.noalias() +=
        dpre.middleRows(kGateOutput * dq, dq) * st.cells.transpose();
    if (!freeze_words) {
      MatS<S> dx(params.dims.d_w, n);
      dx.noalias() = params.wx.transpose() * dpre;
      for (int t = 0; t < n; ++t) grads.word_emb.col(st.tokens[t]) += dx.col(t);
    }
  }
}

}  // namespace hnil
