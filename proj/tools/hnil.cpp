// hnil: question retrieval over a heterogeneous question/user/category
// network. Subcommands cover corpus synthesis, training, evaluation against
// lexical and graph baselines, gradient checking, sweeps, and ad-hoc queries.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "hnil/experiment.hpp"
#include "hnil/gradcheck.hpp"
#include "hnil/hetnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hnil;

namespace {

constexpr double kGradThreshold = 1e-4;

struct CorpusOpts {
  std::string questions, users;
  int min_count = 1;
};

void add_corpus_opts(CLI::App* sub, CorpusOpts& o) {
  sub->add_option("--questions", o.questions, "questions.jsonl path")
      ->required();
  sub->add_option("--users", o.users, "users.jsonl path")->required();
  sub->add_option("--min-count", o.min_count,
                  "vocabulary frequency threshold")
      ->check(CLI::PositiveNumber);
}

struct HyperOpts {
  Hyper h;
  int dim = 100;
};

void add_hyper_opts(CLI::App* sub, HyperOpts& o) {
  sub->add_option("--iters", o.h.m_iter, "outer training iterations");
  sub->add_option("--walk-len", o.h.walk_len, "random walk length");
  sub->add_option("--walks", o.h.walks, "walks per vertex per iteration");
  sub->add_option("--window", o.h.window, "skip-gram window radius");
  sub->add_option("--dim", o.dim,
                  "embedding size per part (word/text/user)");
  sub->add_option("--margin", o.h.margin, "hinge margin, in (0,1)");
  sub->add_option("--lambda", o.h.lambda, "L2 regularization weight");
  sub->add_option("--lr", o.h.rho, "AdaGrad initial learning rate");
  sub->add_option("--neg", o.h.num_neg, "negatives per positive");
  sub->add_option("--batch-windows", o.h.batch_windows,
                  "mini-batch size in windows");
  sub->add_option("--seed", o.h.seed, "RNG seed");
  sub->add_flag("--freeze-words", o.h.freeze_words,
                "do not update word embeddings");
  sub->add_flag_callback(
      "--no-score-norm", [&o] { o.h.score_norm = false; },
      "score with raw dot products instead of cosine");
}

Hyper finish_hyper(const HyperOpts& o) {
  Hyper h = o.h;
  h.dims.d_w = h.dims.d_q = h.dims.d_u = o.dim;
  h.validate();
  return h;
}

void setup_config(CLI::App* sub) {
  sub->set_config("--config", "", "read defaults from a key=value file");
  sub->allow_config_extras(CLI::config_extras_mode::error);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

DeepwalkHyper deepwalk_from(const Hyper& h, int dw_dim, int dw_epochs,
                            int dw_negatives) {
  DeepwalkHyper dw;
  dw.window = h.window;
  dw.walk_len = h.walk_len;
  dw.walks = h.walks;
  dw.dim = dw_dim;
  dw.epochs = dw_epochs;
  dw.negatives = dw_negatives;
  dw.rho = h.rho;
  return dw;
}

json hyper_summary(const Hyper& h, int dim) {
  return json{{"iters", h.m_iter},     {"walk_len", h.walk_len},
              {"walks", h.walks},      {"window", h.window},
              {"dim", dim},            {"margin", h.margin},
              {"lambda", h.lambda},    {"lr", h.rho},
              {"neg", h.num_neg},      {"batch_windows", h.batch_windows},
              {"seed", h.seed},        {"freeze_words", h.freeze_words},
              {"score_norm", h.score_norm}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"question retrieval on a heterogeneous question/user/category "
               "network"};
  app.require_subcommand(1);

  // ---- synth
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic corpus with duplicate groups");
  setup_config(synth);
  SynthSpec spec;
  std::string synth_out = ".";
  std::uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--topics", spec.num_topics, "number of topics");
  synth->add_option("--groups", spec.groups_per_topic,
                    "duplicate groups per topic");
  synth->add_option("--per-group", spec.questions_per_group,
                    "questions per duplicate group");
  synth->add_option("--users-per-cluster", spec.users_per_topic_cluster,
                    "users per topic cluster");
  synth->add_option("--p-in", spec.p_in,
                    "intra-cluster friendship probability");
  synth->add_option("--p-out", spec.p_out,
                    "inter-cluster friendship probability");
  synth->add_option("--q-align", spec.q_align,
                    "probability the asker comes from the group committee");
  synth->add_option("--lexical-overlap", spec.lexical_overlap,
                    "fraction of tokens drawn from the group core pool");
  synth->add_option("--seed", synth_seed, "RNG seed");

  // ---- train
  auto* train_cmd = app.add_subcommand(
      "train", "train question/user embeddings and write a checkpoint");
  setup_config(train_cmd);
  CorpusOpts train_corpus;
  HyperOpts train_hyper;
  double train_frac = 0.8;
  std::string ckpt_path = "model.hnil";
  std::string train_out = "train_report.json";
  std::string dump_graph_path;
  int train_threads = 1;
  add_corpus_opts(train_cmd, train_corpus);
  add_hyper_opts(train_cmd, train_hyper);
  train_cmd->add_option("--train-frac", train_frac,
                        "train fraction; 1.0 trains on everything")
      ->check(CLI::Range(0.05, 1.0));
  train_cmd->add_option("--checkpoint", ckpt_path, "checkpoint output path");
  train_cmd->add_option("--out", train_out, "train report JSON path");
  train_cmd->add_option("--dump-graph", dump_graph_path,
                        "write the training graph edge list here");
  train_cmd->add_option("--threads", train_threads,
                        "reserved; training itself stays single-threaded");

  // ---- eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "evaluate rankers on a held-out split");
  setup_config(eval_cmd);
  CorpusOpts eval_corpus;
  HyperOpts eval_hyper;  // walk/window/lr defaults feed the DeepWalk baseline
  std::string eval_ckpt;
  std::string rankers_csv = "vsm,bm25,deepwalk,hnil";
  double eval_frac = 0.8;
  int k_eval = 20;
  int eval_threads = 1;
  int dw_dim = 200, dw_epochs = 5, dw_negatives = 5;
  std::string eval_out = "eval";
  add_corpus_opts(eval_cmd, eval_corpus);
  add_hyper_opts(eval_cmd, eval_hyper);
  eval_cmd->add_option("--checkpoint", eval_ckpt,
                       "checkpoint path (required for the hnil ranker)");
  eval_cmd->add_option("--rankers", rankers_csv,
                       "comma list from {vsm,bm25,deepwalk,hnil}");
  eval_cmd->add_option("--train-frac", eval_frac, "train fraction")
      ->check(CLI::Range(0.05, 0.99));
  eval_cmd->add_option("--k", k_eval, "evaluation depth")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--threads", eval_threads,
                       "parallel per-query evaluation");
  eval_cmd->add_option("--dw-dim", dw_dim, "DeepWalk embedding size");
  eval_cmd->add_option("--dw-epochs", dw_epochs, "DeepWalk training epochs");
  eval_cmd->add_option("--dw-negatives", dw_negatives,
                       "DeepWalk negatives per pair");
  eval_cmd->add_option("--out", eval_out, "output prefix for report JSON");

  // ---- query
  auto* query_cmd = app.add_subcommand(
      "query", "rank indexed questions against ad-hoc text");
  setup_config(query_cmd);
  CorpusOpts query_corpus;
  std::string query_ckpt, query_text, query_asker;
  int query_k = 10;
  add_corpus_opts(query_cmd, query_corpus);
  query_cmd->add_option("--checkpoint", query_ckpt, "checkpoint path")
      ->required();
  query_cmd->add_option("--text", query_text, "query question text")
      ->required();
  query_cmd->add_option("--asker", query_asker,
                        "asker user id; unknown ids fall back to zero");
  query_cmd->add_option("--k", query_k, "results to return")
      ->check(CLI::PositiveNumber);

  // ---- gradcheck
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "compare analytic gradients against finite differences");
  setup_config(grad_cmd);
  GradCheckConfig gc;
  int gc_dim = 8;
  std::string grad_out;
  grad_cmd->add_option("--seed", gc.seed, "RNG seed");
  grad_cmd->add_option("--dim", gc_dim, "embedding size per part");
  grad_cmd->add_option("--vocab", gc.vocab, "vocabulary size");
  grad_cmd->add_option("--users", gc.users, "user count");
  grad_cmd->add_option("--eps", gc.eps, "finite-difference step");
  grad_cmd->add_flag("--perturb-backward", gc.perturb,
                     "test hook: inject a deliberate gradient bug");
  grad_cmd->add_option("--out", grad_out, "also write the JSON report here");

  // ---- sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "train/evaluate across values of one hyperparameter");
  setup_config(sweep_cmd);
  CorpusOpts sweep_corpus;
  HyperOpts sweep_hyper;
  std::string sweep_param = "walk_len";
  std::vector<int> sweep_values;
  double sweep_frac = 0.8;
  int sweep_k = 20;
  int sweep_threads = 1;
  std::string sweep_out = "sweep.json";
  add_corpus_opts(sweep_cmd, sweep_corpus);
  add_hyper_opts(sweep_cmd, sweep_hyper);
  sweep_cmd->add_option("--param", sweep_param, "one of walk_len|walks|dim")
      ->check(CLI::IsMember({"walk_len", "walks", "dim"}));
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--train-frac", sweep_frac, "train fraction")
      ->check(CLI::Range(0.05, 0.99));
  sweep_cmd->add_option("--k", sweep_k, "evaluation depth");
  sweep_cmd->add_option("--threads", sweep_threads,
                        "parallel per-query evaluation");
  sweep_cmd->add_option("--out", sweep_out, "sweep report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      Corpus corpus = generate_synthetic(spec, synth_seed);
      fs::create_directories(synth_out);
      std::string qp = (fs::path(synth_out) / "questions.jsonl").string();
      std::string up = (fs::path(synth_out) / "users.jsonl").string();
      save_corpus(corpus, qp, up);
      long friendships = 0;
      for (const auto& u : corpus.users) friendships += u.friends.size();
      std::cout << "questions: " << corpus.questions.size() << "\n"
                << "users: " << corpus.users.size() << "\n"
                << "categories: " << corpus.categories.size() << "\n"
                << "vocab: " << corpus.vocab.size() << "\n"
                << "friendships: " << friendships / 2 << "\n"
                << "wrote " << qp << " and " << up << "\n";
    } else if (*train_cmd) {
      Hyper hyper = finish_hyper(train_hyper);
      Corpus corpus = load_corpus(train_corpus.questions, train_corpus.users,
                                  train_corpus.min_count);
      const Corpus* train_on = &corpus;
      Split split;
      size_t held_out = 0;
      if (train_frac < 1.0) {
        split = train_test_split(corpus, train_frac, hyper.seed);
        train_on = &split.train;
        held_out = split.test.size();
      }
      if (!dump_graph_path.empty()) {
        std::ofstream gout(dump_graph_path);
        if (!gout) throw DataError("cannot write " + dump_graph_path);
        dump_edges(build_graph(*train_on), *train_on, gout);
      }
      TrainedModel model = train_checkpoint(*train_on, hyper);
      save_checkpoint(model.ckpt, ckpt_path);

      json report = train_report_json(model.report);
      report["hyper"] = hyper_summary(hyper, train_hyper.dim);
      report["corpus"] = {{"questions", corpus.questions.size()},
                          {"users", corpus.users.size()},
                          {"categories", corpus.categories.size()},
                          {"vocab", corpus.vocab.size()},
                          {"train_questions", train_on->questions.size()},
                          {"test_questions", held_out}};
      report["checkpoint"] = ckpt_path;
      write_json(train_out, report);

      std::cout << "iter     total     hinge      user       reg  seconds\n";
      for (const auto& it : model.report.iterations) {
        char line[128];
        std::snprintf(line, sizeof(line), "%4d %9.3f %9.3f %9.3f %9.4f %8.2f",
                      it.iter, it.total, it.hinge, it.user, it.reg,
                      it.seconds);
        std::cout << line << "\n";
      }
      std::cout << "checkpoint: " << ckpt_path << "\nreport: " << train_out
                << "\n";
    } else if (*eval_cmd) {
      Hyper hyper = finish_hyper(eval_hyper);
      auto rankers = parse_rankers(rankers_csv);
      Corpus corpus = load_corpus(eval_corpus.questions, eval_corpus.users,
                                  eval_corpus.min_count);
      EvalSetup setup =
          make_eval_setup(std::move(corpus), eval_frac, hyper.seed);

      Checkpoint ckpt;
      bool have_ckpt = false;
      if (std::find(rankers.begin(), rankers.end(), "hnil") != rankers.end()) {
        if (eval_ckpt.empty())
          throw std::invalid_argument(
              "--checkpoint is required when the hnil ranker is requested");
        ckpt = load_checkpoint(eval_ckpt);
        have_ckpt = true;
      }
      DeepwalkHyper dw = deepwalk_from(hyper, dw_dim, dw_epochs, dw_negatives);
      auto reports =
          run_comparison(setup, rankers, have_ckpt ? &ckpt : nullptr, dw,
                         hyper.seed, k_eval, eval_threads);

      json combined;
      combined["train_frac"] = eval_frac;
      combined["seed"] = hyper.seed;
      combined["k"] = k_eval;
      combined["rankers"] = json::array();
      for (const auto& rr : reports) {
        json jr = eval_report_json(rr.report);
        jr["ranker"] = rr.ranker;
        write_json(eval_out + "_" + rr.ranker + ".json", jr);
        combined["rankers"].push_back(jr);
      }
      write_json(eval_out + "_combined.json", combined);
      std::cout << comparison_table(reports);
      std::cout << "reports: " << eval_out << "_<ranker>.json, " << eval_out
                << "_combined.json\n";
    } else if (*query_cmd) {
      Checkpoint ckpt = load_checkpoint(query_ckpt);
      Corpus corpus = load_corpus(query_corpus.questions, query_corpus.users,
                                  query_corpus.min_count);
      HnilIndex index = build_hnil_index(ckpt, corpus.questions);
      auto vec = encode_with_checkpoint(ckpt, query_text, query_asker, "");
      auto ranked = hnil_rank(index, vec, "", query_k);
      std::cout << ranked_list_json(ranked).dump(2) << "\n";
    } else if (*grad_cmd) {
      gc.dims = Dims{gc_dim, gc_dim, gc_dim};
      GradCheckResult res = run_gradcheck(gc);
      json out;
      out["max_rel_error"] = res.max_rel;
      out["threshold"] = kGradThreshold;
      out["pass"] = res.max_rel < kGradThreshold;
      out["entries"] = res.entries;
      out["loss"] = res.loss;
      out["seed"] = gc.seed;
      out["tensors"] = json::array();
      for (const auto& t : res.tensors)
        out["tensors"].push_back(
            {{"name", t.name}, {"max_rel_error", t.max_rel}});
      std::cout << out.dump(2) << "\n";
      if (!grad_out.empty()) write_json(grad_out, out);
      if (res.max_rel >= kGradThreshold) {
        std::cerr << "error: gradient check failed: max relative error "
                  << res.max_rel << " >= " << kGradThreshold << "\n";
        return 3;
      }
    } else if (*sweep_cmd) {
      Hyper base = finish_hyper(sweep_hyper);
      if (sweep_values.empty())
        throw std::invalid_argument("sweep needs at least one value");
      Corpus corpus = load_corpus(sweep_corpus.questions, sweep_corpus.users,
                                  sweep_corpus.min_count);
      EvalSetup setup =
          make_eval_setup(std::move(corpus), sweep_frac, base.seed);

      json rows = json::array();
      std::cout << "param: " << sweep_param << "\n";
      std::cout << "value      MAP      P@1      P@5      MRR\n";
      std::cout << "------------------------------------------\n";
      for (int value : sweep_values) {
        Hyper h = base;
        if (sweep_param == "walk_len") {
          h.walk_len = value;
        } else if (sweep_param == "walks") {
          h.walks = value;
        } else {
          h.dims.d_w = h.dims.d_q = h.dims.d_u = value;
        }
        h.validate();
        TrainedModel model = train_checkpoint(setup.split.train, h);
        EvalReport rep = eval_hnil(setup, model.ckpt, sweep_k, sweep_threads);
        char line[96];
        std::snprintf(line, sizeof(line), "%5d %8.4f %8.4f %8.4f %8.4f",
                      value, rep.map, rep.p1, rep.p5, rep.mrr);
        std::cout << line << "\n";
        rows.push_back({{"value", value},
                        {"map", rep.map},
                        {"p1", rep.p1},
                        {"p5", rep.p5},
                        {"mrr", rep.mrr},
                        {"evaluated", rep.evaluated}});
      }
      json out{{"param", sweep_param}, {"rows", rows}};
      write_json(sweep_out, out);
      std::cout << "report: " << sweep_out << "\n";
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
