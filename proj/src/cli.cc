// Copyright 2026 The JFT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jft/cli.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jft/bridge.h"
#include "jft/corpus.h"
#include "jft/errors.h"
#include "jft/eval.h"
#include "jft/fit.h"
#include "jft/model.h"
#include "jft/synthetic.h"
#include "jft/topic.h"
#include "jft/topn.h"

#ifndef JFT_DEFAULT_STOPWORDS
#define JFT_DEFAULT_STOPWORDS ""
#endif

namespace jft {

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("JFT_SEED"); env != nullptr && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != nullptr && *end == '\0') return v;
    throw ValidationError(std::string("JFT_SEED is not an integer: ") + env);
  }
  return 1;
}

// Writes to a file, or to `fallback` when the path is "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ValidationError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct HyperFlags {
  Hyperparams hyper;
  std::string mode = "rating";
  std::string strategy = "jft";

  void add(CLI::App* app, bool with_strategy = true) {
    app->add_option("--k", hyper.k, "Latent factors and topics");
    app->add_option("--lambda-l", hyper.lambda_l, "Weight of the review likelihood");
    app->add_option("--lambda-p", hyper.lambda_p, "L2 regularization weight");
    app->add_option("--kappa", hyper.kappa, "Logistic sharpness (hft strategy)");
    app->add_option("--mode", mode, "rating or binary")
        ->check(CLI::IsMember({"rating", "binary"}));
    if (with_strategy) {
      app->add_option("--strategy", strategy, "jft, hft or lfm")
          ->check(CLI::IsMember({"jft", "hft", "lfm"}));
    }
    app->add_option("--max-iters", hyper.max_iters,
                    "Iteration (epoch) budget");
    app->add_option("--step-scale", hyper.step_scale,
                    "Initial line-search step times the curvature bound");
    app->add_option("--step-decay", hyper.step_decay,
                    "Per-iteration factor on the step scale");
    app->add_option("--max-halvings", hyper.max_halvings,
                    "Line-search halvings before giving up");
    app->add_option("--s1-sweeps", hyper.s1_sweeps,
                    "Gradient sweeps per iteration");
    app->add_option("--tol", hyper.tol, "Relative parameter change to stop at");
    app->add_option("--patience", hyper.patience,
                    "Iterations of worsening validation RMSE before stopping");
    app->add_option("--reject-uphill", hyper.reject_uphill,
                    "Roll back iterations that raise the objective");
  }

  Hyperparams resolve(std::uint64_t seed, unsigned jobs) const {
    Hyperparams h = hyper;
    h.mode = parse_mode(mode);
    h.strategy = parse_strategy(strategy);
    h.seed = seed;
    h.jobs = jobs;
    h.validate();
    return h;
  }
};

void add_sgd_flags(CLI::App* app, SgdOptions& sgd) {
  app->add_option("--lfm-learning-rate", sgd.learning_rate,
                  "SGD learning rate of the lfm strategy");
  app->add_option("--lfm-decay", sgd.decay,
                  "Per-epoch learning-rate factor of the lfm strategy");
  app->add_option("--lfm-epochs", sgd.max_epochs, "Epoch budget of the lfm strategy");
  app->add_option("--lfm-patience", sgd.patience,
                  "Epochs of worsening validation error before lfm stops");
}

std::vector<std::size_t> all_records(const Corpus& corpus) {
  std::vector<std::size_t> out(corpus.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = n;
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Joint factor and topic models for rating prediction and "
               "top-N recommendation"};
  app.name("jft");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  unsigned jobs = 1;
  try {
    seed = default_seed();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed,
                    "Random seed (default from JFT_SEED, else 1)");
    cmd->add_option("--jobs", jobs, "Worker threads; 1 is bit-reproducible")
        ->check(CLI::Range(1u, 1024u));
  };
  add_common(&app);

  std::function<void()> action;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a corpus from JSONL or CSV");
  std::string in_path, in_format = "jsonl", corpus_out = "corpus.json";
  std::string stopwords_path = JFT_DEFAULT_STOPWORDS, duplicates = "reject";
  std::string keep_cities, filter_order = "before";
  std::size_t min_user_reviews = 0;
  ingest_cmd->add_option("--input", in_path, "Input records")->required();
  ingest_cmd->add_option("--format", in_format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ingest_cmd->add_option("--stopwords", stopwords_path,
                         "Stopword list, empty for none");
  ingest_cmd->add_option("--duplicates", duplicates,
                         "reject or last-wins for repeated (user, item)")
      ->check(CLI::IsMember({"reject", "last-wins"}));
  ingest_cmd->add_option("--min-user-reviews", min_user_reviews,
                         "Drop users with fewer records");
  ingest_cmd->add_option("--cities", keep_cities,
                         "Comma-separated cities to keep, empty keeps all");
  ingest_cmd->add_option("--filter-order", filter_order,
                         "Apply the user filter before or after the city filter")
      ->check(CLI::IsMember({"before", "after"}));
  ingest_cmd->add_option("--out", corpus_out, "Corpus file");
  ingest_cmd->callback([&] {
    action = [&] {
      IngestOptions o;
      o.format = in_format == "csv" ? InputFormat::kCsv : InputFormat::kJsonl;
      o.duplicates = duplicates == "last-wins" ? DuplicatePolicy::kLastWins
                                               : DuplicatePolicy::kReject;
      if (!stopwords_path.empty()) o.stopwords = load_stopwords(stopwords_path);
      o.min_user_reviews = min_user_reviews;
      o.keep_cities = split_list(keep_cities);
      o.filter_order =
          filter_order == "after" ? FilterOrder::kAfter : FilterOrder::kBefore;
      const Corpus corpus = ingest(in_path, o);
      Sink sink(corpus_out, out);
      save_corpus(corpus, sink.get());
      err << "ingested " << corpus.size() << " records, "
          << corpus.num_users() << " users, " << corpus.num_items()
          << " items, " << corpus.num_cities() << " cities, "
          << corpus.vocab_size() << " words\n";
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a model on a whole corpus");
  HyperFlags train_flags;
  std::string corpus_path, model_out = "model.json", trace_out, vtrace_out,
                           warm_path;
  double validation_fraction = 0.1;
  SgdOptions train_sgd;
  train_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  train_flags.add(train_cmd);
  train_cmd->add_option("--validation-fraction", validation_fraction,
                        "Share of each user's records used for early stopping "
                        "(rating mode)");
  add_sgd_flags(train_cmd, train_sgd);
  train_cmd->add_option("--warm-start", warm_path,
                        "Model whose parameters start binary training");
  train_cmd->add_option("--out", model_out, "Model file");
  train_cmd->add_option("--trace", trace_out,
                        "CSV of iter,sq_error,log_likelihood,objective");
  train_cmd->add_option("--validation-trace", vtrace_out,
                        "CSV of iter,validation_rmse");
  train_cmd->callback([&] {
    action = [&] {
      const Hyperparams h = train_flags.resolve(seed, jobs);
      const Corpus corpus = load_corpus(corpus_path);
      TrainOptions o;
      o.validation_fraction = validation_fraction;
      o.sgd = train_sgd;
      JftModel warm;
      if (!warm_path.empty()) {
        if (h.mode != Mode::kBinary) {
          throw ValidationError("--warm-start applies to binary mode only");
        }
        warm = load_model(warm_path, corpus);
        o.warm_start = &warm;
      }
      const JftModel model = train_model(corpus, all_records(corpus), h, o);
      {
        Sink sink(model_out, out);
        save_model(model, corpus, sink.get());
      }
      if (!trace_out.empty()) {
        Sink sink(trace_out, out);
        write_trace_csv(model.trace, sink.get());
      }
      if (!vtrace_out.empty()) {
        Sink sink(vtrace_out, out);
        write_validation_csv(model.trace, sink.get());
      }
    };
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate, optionally over a K sweep");
  HyperFlags eval_flags;
  EvalOptions eval_options;
  std::string protocol = "rating", k_list, strategies, report_out = "-",
              json_out;
  eval_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  eval_flags.add(eval_cmd);
  eval_cmd->add_option("--protocol", protocol, "rating, topn or topn_crosscity")
      ->check(CLI::IsMember({"rating", "topn", "topn_crosscity"}));
  eval_cmd->add_option("--folds", eval_options.folds, "Folds");
  eval_cmd->add_option("--top-n", eval_options.top_n, "List length N");
  eval_cmd->add_option("--holdout", eval_options.holdout,
                       "Records held out per user or user-city pair");
  eval_cmd->add_option("--min-city-records", eval_options.min_city_records,
                       "Records a user needs in a foreign city (cross-city)");
  eval_cmd->add_flag("--clip", eval_options.clip,
                     "Clip rating predictions to [1, 5]");
  eval_cmd->add_option("--validation-fraction",
                       eval_options.train.validation_fraction,
                       "Early-stopping share of training records (rating mode)");
  add_sgd_flags(eval_cmd, eval_options.train.sgd);
  eval_cmd->add_option("--k-list", k_list,
                       "Comma-separated K values to sweep, empty uses --k");
  eval_cmd->add_option("--strategies", strategies,
                       "Comma-separated strategies, empty uses --strategy");
  eval_cmd->add_option("--out", report_out, "CSV report, - for stdout");
  eval_cmd->add_option("--json", json_out, "JSON report (single run only)");
  eval_cmd->callback([&] {
    action = [&] {
      const Hyperparams h = eval_flags.resolve(seed, 1);
      const Corpus corpus = load_corpus(corpus_path);
      EvalOptions o = eval_options;
      o.protocol = parse_protocol(protocol);
      o.jobs = jobs;
      std::vector<std::size_t> ks;
      for (const auto& s : split_list(k_list)) {
        try {
          ks.push_back(static_cast<std::size_t>(std::stoul(s)));
        } catch (const std::exception&) {
          throw ValidationError("bad K value '" + s + "'");
        }
      }
      if (ks.empty()) ks.push_back(h.k);
      std::vector<Strategy> ss;
      for (const auto& s : split_list(strategies)) ss.push_back(parse_strategy(s));
      if (ss.empty()) ss.push_back(h.strategy);
      const auto reports = run_sweep(corpus, h, o, ks, ss);
      {
        Sink sink(report_out, out);
        write_report_csv(reports, sink.get());
      }
      if (!json_out.empty()) {
        if (reports.size() != 1) {
          throw ValidationError("--json needs a single K and strategy");
        }
        Sink sink(json_out, out);
        write_report_json(reports.front(), sink.get());
      }
    };
  });

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "Top-N lists as user,rank,item,score");
  std::string model_path, user_name, city_name, recs_out = "-";
  std::size_t top_n = 5;
  rec_cmd->add_option("--corpus", corpus_path, "Corpus the model was trained on")
      ->required();
  rec_cmd->add_option("--model", model_path, "Model file")->required();
  rec_cmd->add_option("--user", user_name, "User, empty for every user");
  rec_cmd->add_option("--city", city_name,
                      "City to rank in, empty uses each user's home city");
  rec_cmd->add_option("--top-n", top_n, "List length");
  rec_cmd->add_option("--out", recs_out, "CSV output, - for stdout");
  rec_cmd->callback([&] {
    action = [&] {
      if (top_n < 1) throw ValidationError("--top-n must be at least 1");
      const Corpus corpus = load_corpus(corpus_path);
      const JftModel model = load_model(model_path, corpus);
      std::vector<Id> users;
      if (user_name.empty()) {
        for (Id u = 0; u < corpus.num_users(); ++u) users.push_back(u);
      } else {
        users.push_back(corpus.users.at(user_name));
      }
      std::optional<Id> city;
      if (!city_name.empty()) city = corpus.cities.at(city_name);
      std::vector<std::unordered_set<Id>> seen(corpus.num_users());
      for (const auto& x : corpus.interactions) seen[x.user].insert(x.item);
      Sink sink(recs_out, out);
      auto& o = sink.get();
      o << "user,rank,item,score\n";
      for (Id u : users) {
        const Id c = city ? *city : corpus.user_city[u];
        const auto rec = recommend(model, corpus, u, c, top_n, seen[u]);
        if (rec.short_list) {
          err << "warning: only " << rec.items.size() << " candidates for user "
              << corpus.users.name(u) << '\n';
        }
        for (std::size_t r = 0; r < rec.items.size(); ++r) {
          o << corpus.users.name(u) << ',' << r + 1 << ','
            << corpus.items.name(rec.items[r].item) << ','
            << fmt(rec.items[r].score) << '\n';
        }
      }
    };
  });

  // topics
  auto* topics_cmd = app.add_subcommand("topics", "Top words of every topic");
  std::size_t top_words_n = 10;
  std::string topics_out = "-";
  topics_cmd->add_option("--corpus", corpus_path, "Corpus the model was trained on")
      ->required();
  topics_cmd->add_option("--model", model_path, "Model file")->required();
  topics_cmd->add_option("--top", top_words_n, "Words per topic");
  topics_cmd->add_option("--out", topics_out, "CSV output, - for stdout");
  topics_cmd->callback([&] {
    action = [&] {
      const Corpus corpus = load_corpus(corpus_path);
      const JftModel model = load_model(model_path, corpus);
      const auto words = top_words(model.topics, corpus.vocab, top_words_n);
      Sink sink(topics_out, out);
      auto& o = sink.get();
      o << "topic";
      const std::size_t columns = words.empty() ? 0 : words.front().size();
      for (std::size_t r = 1; r <= columns; ++r) o << ",word_" << r;
      o << '\n';
      for (std::size_t k = 0; k < words.size(); ++k) {
        o << k;
        for (const auto& [w, p] : words[k]) o << ',' << w;
        o << '\n';
      }
    };
  });

  // feature-map
  auto* fmap_cmd = app.add_subcommand(
      "feature-map", "Per-city share of the reviews that use a word");
  std::string feature_word, fmap_out = "-";
  fmap_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  fmap_cmd->add_option("--word", feature_word, "Feature word")->required();
  fmap_cmd->add_option("--out", fmap_out, "CSV of city,fraction");
  fmap_cmd->callback([&] {
    action = [&] {
      const Corpus corpus = load_corpus(corpus_path);
      const auto table = feature_city_distribution(corpus, feature_word);
      Sink sink(fmap_out, out);
      auto& o = sink.get();
      o << "city,fraction\n";
      for (Id c = 0; c < corpus.num_cities(); ++c) {
        o << corpus.cities.name(c) << ',' << fmt(table[c]) << '\n';
      }
    };
  });

  // counterexample
  auto* cex_cmd = app.add_subcommand(
      "counterexample",
      "Search for vector pairs whose dot-product order a randomization "
      "function reverses");
  std::string fn_name = "logistic", cex_out = "-";
  double kappa = 1.0;
  std::size_t cex_k = 2, budget = 100000;
  cex_cmd->add_option("--fn", fn_name, "logistic, reversed_logistic or identity")
      ->check(CLI::IsMember({"logistic", "reversed_logistic", "identity"}));
  cex_cmd->add_option("--kappa", kappa, "Logistic sharpness");
  cex_cmd->add_option("--k", cex_k, "Vector dimension");
  cex_cmd->add_option("--budget", budget, "Trials");
  cex_cmd->add_option("--out", cex_out, "JSON certificate, - for stdout");
  cex_cmd->callback([&] {
    action = [&] {
      if (cex_k < 1) throw ValidationError("--k must be at least 1");
      const RandomizationFn f = make_randomization(fn_name, kappa);
      const auto v = find_product_violation(f, cex_k, budget, seed);
      nlohmann::ordered_json j;
      j["fn"] = f.name;
      if (f.kappa) j["kappa"] = *f.kappa;
      j["k"] = cex_k;
      j["budget"] = budget;
      j["seed"] = seed;
      j["found"] = v.has_value();
      if (v) {
        j["verified"] = verify_violation(f, *v);
        j["method"] = v->method;
        j["trial"] = v->trial;
        j["gamma1"] = v->gamma1;
        j["gamma2"] = v->gamma2;
        j["gamma3"] = v->gamma3;
        j["gamma4"] = v->gamma4;
        j["lhs_dot"] = v->lhs_dot;
        j["rhs_dot"] = v->rhs_dot;
        j["f_lhs_dot"] = v->f_lhs_dot;
        j["f_rhs_dot"] = v->f_rhs_dot;
      }
      Sink sink(cex_out, out);
      sink.get() << std::setprecision(17) << j.dump(2) << '\n';
    };
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted corpus");
  SyntheticOptions so;
  std::string planted_out;
  synth_cmd->add_option("--users", so.users, "Users");
  synth_cmd->add_option("--items", so.items, "Items");
  synth_cmd->add_option("--k", so.k, "Planted factors and topics");
  synth_cmd->add_option("--reviews-per-user", so.reviews_per_user,
                        "Records per user");
  synth_cmd->add_option("--vocab-size", so.vocab_size, "Vocabulary size");
  synth_cmd->add_option("--cities", so.cities, "Cities");
  synth_cmd->add_option("--doc-length", so.doc_length, "Words per review");
  synth_cmd->add_option("--traveler-fraction", so.traveler_fraction,
                        "Share of users with records in a second city");
  synth_cmd->add_option("--away-records", so.away_records,
                        "Records a traveler has in the second city");
  synth_cmd->add_option("--noise-sd", so.noise_sd, "Rating noise sd");
  synth_cmd->add_option("--affinity", so.affinity,
                        "How strongly item choice follows planted scores");
  synth_cmd->add_option("--out", corpus_out, "Corpus file");
  synth_cmd->add_option("--planted", planted_out, "Planted model file");
  synth_cmd->callback([&] {
    action = [&] {
      so.seed = seed;
      const SyntheticData data = generate_synthetic(so);
      {
        Sink sink(corpus_out, out);
        save_corpus(data.corpus, sink.get());
      }
      if (!planted_out.empty()) {
        Sink sink(planted_out, out);
        save_model(data.planted, data.corpus, sink.get());
      }
    };
  });

  for (auto* cmd : app.get_subcommands({})) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  try {
    if (action) action();
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace jft
