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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "jft/errors.h"
#include "jft/eval.h"
#include "jft/random.h"
#include "jft/synthetic.h"

namespace jft {
namespace {

TEST_CASE("rmse and mae") {
  const std::vector<double> a{1, 2, 3};
  CHECK(rmse(a, a) == 0.0);
  CHECK(mae(a, a) == 0.0);
  const std::vector<double> p{3}, t{5};
  CHECK(rmse(p, t) == 2.0);
  CHECK(mae(p, t) == 2.0);
  CHECK_THROWS_AS(rmse({}, {}), ValidationError);
  CHECK_THROWS_AS(mae(a, p), ValidationError);
  const std::vector<double> wild{-3, 9};
  const std::vector<double> truth{1, 5};
  CHECK(rmse(wild, truth, true) == 0.0);
  CHECK(mae(wild, truth, false) == 4.0);
}

TEST_CASE("metrics match brute-force oracles on random instances") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.index(30);
    std::vector<double> p(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = rng.uniform(0, 6);
      y[k] = 1 + static_cast<double>(rng.index(5));
    }
    double sq = 0, ab = 0;
    for (std::size_t k = 0; k < n; ++k) {
      sq += (p[k] - y[k]) * (p[k] - y[k]);
      ab += std::abs(p[k] - y[k]);
    }
    const double r = rmse(p, y), m = mae(p, y);
    CHECK(std::abs(r - std::sqrt(sq / n)) < 1e-12);
    CHECK(std::abs(m - ab / n) < 1e-12);
    CHECK(r >= m - 1e-15);

    // Ranking metrics.
    std::vector<Id> list(20);
    std::iota(list.begin(), list.end(), Id{0});
    rng.shuffle(list);
    list.resize(rng.index(12));
    std::unordered_set<Id> relevant;
    const std::size_t nr = rng.index(8);
    while (relevant.size() < nr) relevant.insert(static_cast<Id>(rng.index(20)));
    const std::size_t cut = 1 + rng.index(10);
    double hits = 0, dcg = 0, idcg = 0;
    for (std::size_t q = 0; q < std::min(cut, list.size()); ++q) {
      if (relevant.count(list[q])) {
        hits += 1;
        dcg += 1.0 / std::log2(static_cast<double>(q) + 2.0);
      }
    }
    for (std::size_t q = 0; q < std::min(cut, relevant.size()); ++q) {
      idcg += 1.0 / std::log2(static_cast<double>(q) + 2.0);
    }
    const double prec = precision_at_n(list, relevant, cut);
    const double nd = ndcg_at_n(list, relevant, cut);
    CHECK(std::abs(prec - hits / cut) < 1e-12);
    CHECK(std::abs(nd - (idcg > 0 ? dcg / idcg : 0.0)) < 1e-12);
    CHECK(prec >= 0.0);
    CHECK(prec <= 1.0);
    CHECK(nd >= 0.0);
    CHECK(nd <= 1.0 + 1e-12);

    // Consistent relabeling leaves both unchanged.
    std::vector<Id> perm(20);
    std::iota(perm.begin(), perm.end(), Id{0});
    rng.shuffle(perm);
    std::vector<Id> list2;
    for (Id i : list) list2.push_back(perm[i]);
    std::unordered_set<Id> rel2;
    for (Id i : relevant) rel2.insert(perm[i]);
    CHECK(precision_at_n(list2, rel2, cut) == prec);
    CHECK(ndcg_at_n(list2, rel2, cut) == nd);
  }
}

TEST_CASE("ranking metric examples") {
  const std::vector<Id> list{1, 2, 3, 4, 5};
  CHECK(precision_at_n(list, {2, 4, 9}, 5) == doctest::Approx(0.4));
  CHECK(precision_at_n(list, {1, 2, 3, 4, 5}, 5) == 1.0);
  CHECK(ndcg_at_n(list, {1, 2, 3, 4, 5, 6}, 5) == doctest::Approx(1.0));
  CHECK(ndcg_at_n(list, {2}, 5) == doctest::Approx(0.6309).epsilon(1e-4));
  CHECK(std::abs(ndcg_at_n(list, {2}, 5) - 1.0 / std::log2(3.0)) < 1e-15);
  CHECK(ndcg_at_n(list, {}, 5) == 0.0);
  CHECK_THROWS_AS(precision_at_n(list, {1}, 0), ValidationError);
}

TEST_CASE("constant-prediction stub gives the population std of test ratings") {
  const auto data = generate_synthetic(40, 30, 2, 10, 30, 2);
  const Corpus& c = data.corpus;
  EvalOptions o;
  o.trainer = [](const Corpus& corpus, std::span<const std::size_t> train,
                 const Hyperparams& h) {
    // Predict the mean of the records not trained on.
    std::vector<char> in(corpus.size(), 0);
    for (auto n : train) in[n] = 1;
    double s = 0, cnt = 0;
    for (std::size_t n = 0; n < corpus.size(); ++n) {
      if (!in[n]) {
        s += corpus.interactions[n].rating;
        cnt += 1;
      }
    }
    JftModel m;
    m.hyper = h;
    m.params = FactorParams::zeros(corpus.num_users(), corpus.num_items(), h.k);
    m.params.alpha = s / cnt;
    m.topics = make_topic_state(h.k, corpus.vocab_size());
    return m;
  };
  Hyperparams h;
  h.k = 2;
  h.seed = 3;
  const auto report = cross_validate(c, h, o);
  REQUIRE(report.folds.size() == 5);
  const auto folds = split_folds(c, 5, 3);
  std::size_t total = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    double mean = 0;
    for (auto n : folds[f].test) mean += c.interactions[n].rating;
    mean /= folds[f].test.size();
    double var = 0;
    for (auto n : folds[f].test) var += std::pow(c.interactions[n].rating - mean, 2);
    var /= folds[f].test.size();
    CHECK(report.folds[f].metrics.at("rmse") == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(report.folds[f].evaluated == folds[f].test.size());
    total += report.folds[f].evaluated;
  }
  CHECK(total == c.size());
}

Hyperparams small_hyper() {
  Hyperparams h;
  h.k = 3;
  h.lambda_l = 0.3;
  h.lambda_p = 1.0;
  h.max_iters = 4;
  h.s1_sweeps = 2;
  return h;
}

SyntheticData small_corpus() {
  SyntheticOptions o;
  o.users = 40;
  o.items = 60;
  o.k = 3;
  o.reviews_per_user = 12;
  o.vocab_size = 30;
  o.doc_length = 10;
  o.traveler_fraction = 0.5;
  o.away_records = 6;
  return generate_synthetic(o);
}

TEST_CASE("cross_validate is reproducible and reports sample std") {
  const auto data = small_corpus();
  EvalOptions o;
  o.folds = 3;
  const auto a = cross_validate(data.corpus, small_hyper(), o);
  const auto b = cross_validate(data.corpus, small_hyper(), o);
  REQUIRE(a.folds.size() == 3);
  for (std::size_t f = 0; f < 3; ++f) CHECK(a.folds[f].metrics == b.folds[f].metrics);
  double m = 0;
  for (const auto& f : a.folds) m += f.metrics.at("rmse");
  m /= 3;
  double v = 0;
  for (const auto& f : a.folds) v += std::pow(f.metrics.at("rmse") - m, 2);
  CHECK(a.mean.at("rmse") == doctest::Approx(m).epsilon(1e-14));
  CHECK(a.stddev.at("rmse") == doctest::Approx(std::sqrt(v / 2)).epsilon(1e-12));
  CHECK(a.mean.at("rmse") >= a.mean.at("mae"));

  o.jobs = 3;
  const auto c = cross_validate(data.corpus, small_hyper(), o);
  for (std::size_t f = 0; f < 3; ++f) CHECK(c.folds[f].metrics == a.folds[f].metrics);
}

TEST_CASE("top-n protocols") {
  const auto data = small_corpus();
  Hyperparams h = small_hyper();
  h.mode = Mode::kBinary;
  EvalOptions o;
  o.folds = 2;
  o.protocol = Protocol::kTopN;
  const auto r = cross_validate(data.corpus, h, o);
  REQUIRE(r.folds.size() == 2);
  for (const auto& f : r.folds) {
    CHECK(f.evaluated > 0);
    CHECK(f.metrics.at("precision") >= 0.0);
    CHECK(f.metrics.at("precision") <= 1.0);
    CHECK(f.metrics.at("ndcg") <= 1.0);
  }

  o.protocol = Protocol::kTopNCrossCity;
  const auto x = cross_validate(data.corpus, h, o);
  CHECK(x.cross_city());
  CHECK(x.folds[0].evaluated == select_cross_city_pairs(data.corpus, 5).size());

  o.min_city_records = 50;
  o.holdout = 5;
  CHECK_THROWS_AS(cross_validate(data.corpus, h, o), ValidationError);
}

TEST_CASE("report writers and sweep") {
  const auto data = small_corpus();
  EvalOptions o;
  o.folds = 2;
  const std::vector<std::size_t> ks{2, 3};
  const std::vector<Strategy> ss{Strategy::kJft, Strategy::kLfm};
  const auto reports = run_sweep(data.corpus, small_hyper(), o, ks, ss);
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].k == 2);
  CHECK(reports[1].strategy == Strategy::kLfm);
  std::ostringstream csv;
  write_report_csv(reports, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "protocol,strategy,K,fold,metric,value");
  std::size_t rows = 0, rmse_means = 0;
  while (std::getline(lines, line)) {
    ++rows;
    rmse_means += line.find(",mean,rmse,") != std::string::npos;
  }
  CHECK(rmse_means == 4);
  CHECK(rows == 4 * (2 + 2) * 2);

  // Sweep points equal single runs with the same seed.
  Hyperparams single = small_hyper();
  single.k = 3;
  single.strategy = Strategy::kJft;
  const auto one = cross_validate(data.corpus, single, o);
  CHECK(one.mean == reports[2].mean);

  std::ostringstream js;
  write_report_json(one, js);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("protocol") == "rating");
  CHECK(j.at("folds").size() == 2);
  CHECK_THROWS_AS(run_sweep(data.corpus, small_hyper(), o, {}, ss), ValidationError);
}

TEST_CASE("train_model dispatch") {
  const auto data = small_corpus();
  std::vector<std::size_t> all(data.corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Hyperparams h = small_hyper();
  h.strategy = Strategy::kLfm;
  const JftModel lfm = train_model(data.corpus, all, h);
  CHECK_FALSE(lfm.trace.empty());
  CHECK(lfm.topics.normalized);
  CHECK(std::isfinite(lfm.trace.back().validation_rmse));
  h.strategy = Strategy::kJft;
  const JftModel jft = train_model(data.corpus, all, h);
  CHECK(jft.trace.size() <= h.max_iters);
  CHECK(parse_protocol("topn_crosscity") == Protocol::kTopNCrossCity);
  CHECK_THROWS_AS(parse_protocol("x"), ValidationError);
}

}  // namespace
}  // namespace jft
