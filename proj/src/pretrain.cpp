#include "hnil/pretrain.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "hnil/common.hpp"

namespace hnil {

MatS<float> pretrain_word_vectors(const Corpus& corpus, int dim,
                                  std::uint64_t seed, int window, int epochs,
                                  int negatives, float rho) {
  if (dim < 1 || window < 1 || epochs < 0 || negatives < 0 || !(rho > 0.0f))
    throw std::invalid_argument("word pretraining: invalid hyperparameters");

  const int V = static_cast<int>(corpus.vocab.size());
  MatS<float> table(dim, V);
  {
    auto rng = make_rng(derive_seed(seed, 0x77Au));
    detail::fill_normal<float>(table, rng, 0.1);
  }

  std::vector<double> counts(V, 0.0);
  for (const auto& q : corpus.questions)
    for (const auto& sent : q.sentences)
      for (int tok : sent)
        if (tok != 0) counts[tok] += 1.0;
  if (std::all_of(counts.begin(), counts.end(),
                  [](double c) { return c == 0.0; }))
    return table;
  for (double& c : counts) c = std::pow(c, 0.75);
  std::discrete_distribution<int> neg_dist(counts.begin(), counts.end());

  MatS<float> acc = MatS<float>::Zero(dim, V);
  const float eps = 1e-8f;
  auto adagrad_col = [&](int col, const VecS<float>& g) {
    acc.col(col).array() += g.array().square();
    table.col(col).array() -=
        rho * g.array() / (acc.col(col).array() + eps).sqrt();
  };

  VecS<float> gc(dim);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    auto rng = make_rng(derive_seed(seed, 0x77Bu, epoch));
    for (const auto& q : corpus.questions) {
      for (const auto& sent : q.sentences) {
        const int n = static_cast<int>(sent.size());
        for (int i = 0; i < n; ++i) {
          const int center = sent[i];
          if (center == 0) continue;
          for (int j = std::max(0, i - window);
               j <= std::min(n - 1, i + window); ++j) {
            const int ctx = sent[j];
            if (j == i || ctx == 0) continue;
            gc.setZero();
            {
              double dot =
                  static_cast<double>(table.col(ctx).dot(table.col(center)));
              float g = static_cast<float>(1.0 / (1.0 + std::exp(-dot)) - 1.0);
              gc += g * table.col(ctx);
              VecS<float> gx = g * table.col(center);
              adagrad_col(ctx, gx);
            }
            for (int m = 0; m < negatives; ++m) {
              int neg = neg_dist(rng);
              if (neg == ctx || neg == center) continue;
              double dot =
                  static_cast<double>(table.col(neg).dot(table.col(center)));
              float g = static_cast<float>(1.0 / (1.0 + std::exp(-dot)));
              gc += g * table.col(neg);
              VecS<float> gn = g * table.col(center);
              adagrad_col(neg, gn);
            }
            adagrad_col(center, gc);
          }
        }
      }
    }
  }
  return table;
}

}  // namespace hnil
