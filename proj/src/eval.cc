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

#include "jft/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "jft/errors.h"
#include "jft/fit.h"
#include "jft/random.h"
#include "jft/topn.h"

namespace jft {

namespace {

void check_pair(std::span<const double> p, std::span<const double> t) {
  if (p.empty()) throw ValidationError("metric input is empty");
  if (p.size() != t.size()) {
    throw ValidationError("predictions and truths differ in length");
  }
}

double clipped(double x, bool clip) { return clip ? std::clamp(x, 1.0, 5.0) : x; }

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> truths,
            bool clip) {
  check_pair(predictions, truths);
  double s = 0.0;
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const double e = clipped(predictions[n], clip) - truths[n];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

double mae(std::span<const double> predictions, std::span<const double> truths,
           bool clip) {
  check_pair(predictions, truths);
  double s = 0.0;
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    s += std::abs(clipped(predictions[n], clip) - truths[n]);
  }
  return s / static_cast<double>(predictions.size());
}

double precision_at_n(std::span<const Id> recommended,
                      const std::unordered_set<Id>& relevant, std::size_t n) {
  if (n == 0) throw ValidationError("n must be at least 1");
  std::size_t hits = 0;
  for (std::size_t p = 0; p < std::min(n, recommended.size()); ++p) {
    hits += relevant.contains(recommended[p]);
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double ndcg_at_n(std::span<const Id> recommended,
                 const std::unordered_set<Id>& relevant, std::size_t n) {
  if (n == 0) throw ValidationError("n must be at least 1");
  double dcg = 0.0;
  for (std::size_t p = 0; p < std::min(n, recommended.size()); ++p) {
    if (relevant.contains(recommended[p])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min(n, relevant.size()); ++p) {
    idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

JftModel train_model(const Corpus& corpus, std::span<const std::size_t> records,
                     const Hyperparams& hyper, const TrainOptions& options) {
  hyper.validate();
  const double fraction = hyper.mode == Mode::kBinary
                              ? options.binary_validation_fraction
                              : options.validation_fraction;
  const TrainingData data = make_training_data(corpus, records, fraction,
                                               mix_seed(hyper.seed, 7));
  if (data.train.empty()) throw ValidationError("training set is empty");
  if (hyper.mode == Mode::kBinary) {
    return fit_binary(corpus, data.train, data.validation, hyper,
                      options.warm_start);
  }
  if (hyper.strategy != Strategy::kLfm) return fit(corpus, data, hyper);

  SgdOptions sgd = options.sgd;
  sgd.seed = hyper.seed;
  const auto train = ratings_of(corpus, data.train);
  const auto validation = ratings_of(corpus, data.validation);
  LfmFit lfm = fit_lfm(corpus.num_users(), corpus.num_items(), hyper.k, train,
                       validation, hyper.lambda_p, sgd);
  JftModel model;
  model.hyper = hyper;
  model.params = std::move(lfm.params);
  model.topics = make_topic_state(hyper.k, corpus.vocab_size());
  normalize_phi(model.topics);
  for (std::size_t e = 0; e < lfm.train_objective.size(); ++e) {
    TraceRow row;
    row.iter = e + 1;
    row.objective = lfm.train_objective[e];
    row.validation_rmse =
        validation.empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : std::sqrt(lfm.validation_error[e] /
                        static_cast<double>(validation.size()));
    model.trace.push_back(row);
  }
  return model;
}

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kRating:
      return "rating";
    case Protocol::kTopN:
      return "topn";
    case Protocol::kTopNCrossCity:
      return "topn_crosscity";
  }
  return "?";
}

Protocol parse_protocol(const std::string& s) {
  if (s == "rating") return Protocol::kRating;
  if (s == "topn") return Protocol::kTopN;
  if (s == "topn_crosscity") return Protocol::kTopNCrossCity;
  throw ValidationError("unknown protocol '" + s + "'");
}

namespace {

// A ranking task: a user, the city to rank in, and the held-out items.
struct RankingCase {
  Id user = 0;
  Id city = 0;
  std::unordered_set<Id> relevant;
};

struct FoldPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;       // rating protocol
  std::vector<RankingCase> cases;      // top-N protocols
};

std::vector<FoldPlan> plan_folds(const Corpus& corpus, const Hyperparams& hyper,
                                 const EvalOptions& options) {
  std::vector<FoldPlan> plans;
  if (options.protocol == Protocol::kRating) {
    for (auto& f : split_folds(corpus, options.folds, hyper.seed)) {
      plans.push_back({std::move(f.train), std::move(f.test), {}});
    }
    return plans;
  }
  for (std::size_t f = 0; f < options.folds; ++f) {
    const std::uint64_t seed = mix_seed(hyper.seed, 100 + f);
    FoldPlan plan;
    if (options.protocol == Protocol::kTopN) {
      Holdout h = holdout_per_user(corpus, options.holdout, seed);
      std::vector<RankingCase> by_user(corpus.num_users());
      for (auto n : h.test) {
        const auto& x = corpus.interactions[n];
        // Ranking happens in the user's home city.
        if (x.city != corpus.user_city[x.user]) continue;
        by_user[x.user].user = x.user;
        by_user[x.user].city = x.city;
        by_user[x.user].relevant.insert(x.item);
      }
      for (auto& c : by_user) {
        if (!c.relevant.empty()) plan.cases.push_back(std::move(c));
      }
      plan.train = std::move(h.train);
      plan.test = std::move(h.test);
    } else {
      CrossCityHoldout h = holdout_cross_city(
          corpus, options.holdout, options.min_city_records, seed);
      if (h.pairs.empty()) {
        throw ValidationError(
            "no user has enough records outside their home city");
      }
      for (const auto& p : h.pairs) {
        RankingCase c{p.user, p.city, {}};
        for (auto n : p.held_out) c.relevant.insert(corpus.interactions[n].item);
        plan.cases.push_back(std::move(c));
      }
      plan.train = std::move(h.train);
      plan.test = std::move(h.test);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

FoldResult evaluate_fold(const Corpus& corpus, const Hyperparams& hyper,
                         const EvalOptions& options, const FoldPlan& plan,
                         int fold) {
  Hyperparams h = hyper;
  h.seed = mix_seed(hyper.seed, static_cast<std::uint64_t>(fold));
  const JftModel model =
      options.trainer ? options.trainer(corpus, plan.train, h)
                      : train_model(corpus, plan.train, h, options.train);
  FoldResult out;
  out.fold = fold;
  if (options.protocol == Protocol::kRating) {
    std::vector<double> pred, truth;
    for (auto n : plan.test) {
      const auto& x = corpus.interactions[n];
      pred.push_back(score(model, x.user, x.item));
      truth.push_back(x.rating);
    }
    out.metrics["rmse"] = rmse(pred, truth, options.clip);
    out.metrics["mae"] = mae(pred, truth, options.clip);
    out.evaluated = plan.test.size();
    return out;
  }
  std::vector<std::unordered_set<Id>> seen(corpus.num_users());
  for (auto n : plan.train) {
    seen[corpus.interactions[n].user].insert(corpus.interactions[n].item);
  }
  double precision = 0.0, ndcg = 0.0;
  std::vector<Id> list;
  for (const auto& c : plan.cases) {
    const Recommendation rec =
        recommend(model, corpus, c.user, c.city, options.top_n, seen[c.user]);
    list.clear();
    for (const auto& r : rec.items) list.push_back(r.item);
    precision += precision_at_n(list, c.relevant, options.top_n);
    ndcg += ndcg_at_n(list, c.relevant, options.top_n);
  }
  if (plan.cases.empty()) {
    throw ValidationError("fold " + std::to_string(fold) +
                          " has no users to rank for");
  }
  const double m = static_cast<double>(plan.cases.size());
  out.metrics["precision"] = precision / m;
  out.metrics["ndcg"] = ndcg / m;
  out.evaluated = plan.cases.size();
  return out;
}

void summarize(EvalReport& report) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& f : report.folds) {
    for (const auto& [name, v] : f.metrics) {
      if (!std::isfinite(v)) {
        throw EvaluationError("metric " + name + " is not finite in fold " +
                              std::to_string(f.fold));
      }
      values[name].push_back(v);
    }
    const auto r = f.metrics.find("rmse");
    const auto a = f.metrics.find("mae");
    if (r != f.metrics.end() && a != f.metrics.end() &&
        r->second < a->second - 1e-12) {
      throw EvaluationError("rmse below mae in fold " + std::to_string(f.fold));
    }
  }
  for (const auto& [name, v] : values) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    report.mean[name] = mean;
    report.stddev[name] =
        v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
}

}  // namespace

EvalReport cross_validate(const Corpus& corpus, const Hyperparams& hyper,
                          const EvalOptions& options) {
  hyper.validate();
  if (options.folds < 1) throw ValidationError("need at least one fold");
  if (options.top_n < 1) throw ValidationError("n must be at least 1");
  const auto plans = plan_folds(corpus, hyper, options);

  EvalReport report;
  report.protocol = options.protocol;
  report.strategy = hyper.strategy;
  report.k = hyper.k;
  report.folds.resize(plans.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t f = next++; f < plans.size(); f = next++) {
      try {
        report.folds[f] = evaluate_fold(corpus, hyper, options, plans[f],
                                        static_cast<int>(f));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(
      1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(plans.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  summarize(report);
  return report;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::vector<EvalReport>& reports, std::ostream& out,
                      bool header) {
  if (header) out << "protocol,strategy,K,fold,metric,value\n";
  for (const auto& r : reports) {
    const std::string prefix =
        to_string(r.protocol) + ',' + to_string(r.strategy) + ',' +
        std::to_string(r.k) + ',';
    for (const auto& f : r.folds) {
      for (const auto& [name, v] : f.metrics) {
        out << prefix << f.fold << ',' << name << ',' << format_value(v) << '\n';
      }
    }
    for (const auto& [name, v] : r.mean) {
      out << prefix << "mean," << name << ',' << format_value(v) << '\n';
    }
    for (const auto& [name, v] : r.stddev) {
      out << prefix << "std," << name << ',' << format_value(v) << '\n';
    }
  }
}

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(report.protocol);
  j["cross_city"] = report.cross_city();
  j["strategy"] = to_string(report.strategy);
  j["K"] = report.k;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : report.folds) {
    nlohmann::ordered_json row;
    row["fold"] = f.fold;
    row["evaluated"] = f.evaluated;
    for (const auto& [name, v] : f.metrics) row[name] = v;
    j["folds"].push_back(row);
  }
  j["mean"] = report.mean;
  j["std"] = report.stddev;
  out << j.dump(2) << '\n';
}

std::vector<EvalReport> run_sweep(const Corpus& corpus, const Hyperparams& hyper,
                                  const EvalOptions& options,
                                  std::span<const std::size_t> k_list,
                                  std::span<const Strategy> strategies) {
  if (k_list.empty()) throw ValidationError("K list is empty");
  if (strategies.empty()) throw ValidationError("strategy list is empty");
  std::vector<EvalReport> out;
  for (auto k : k_list) {
    for (auto s : strategies) {
      Hyperparams h = hyper;
      h.k = k;
      h.strategy = s;
      out.push_back(cross_validate(corpus, h, options));
    }
  }
  return out;
}

}  // namespace jft
