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
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "jft/errors.h"
#include "jft/fit.h"
#include "jft/random.h"
#include "jft/synthetic.h"
#include "jft/topn.h"

namespace jft {
namespace {

// Users u0..u(n-1), items with the given cities; records as (user, item).
Corpus make_corpus(std::size_t users, const std::vector<Id>& item_city,
                   std::size_t cities,
                   const std::vector<std::pair<Id, Id>>& records) {
  Corpus c;
  for (std::size_t n = 0; n < cities; ++n) c.cities.intern("c" + std::to_string(n));
  for (std::size_t n = 0; n < users; ++n) c.users.intern("u" + std::to_string(n));
  for (std::size_t n = 0; n < item_city.size(); ++n) c.items.intern("i" + std::to_string(n));
  c.vocab.intern("w");
  c.item_city = item_city;
  c.user_city.assign(users, 0);
  for (auto [u, i] : records) c.interactions.push_back({u, i, item_city[i], 4.0, {0}});
  return c;
}

std::vector<std::size_t> all_of(const Corpus& c) {
  std::vector<std::size_t> out(c.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = n;
  return out;
}

TEST_CASE("forced negative choice and skips") {
  const Corpus c = make_corpus(2, {0, 0, 1}, 2, {{0, 0}, {1, 2}});
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto b = sample_negatives(c, all_of(c), seed);
    REQUIRE(b.negatives.size() == 1);
    CHECK(b.negatives[0].user == 0);
    CHECK(b.negatives[0].item == 1);
    CHECK(b.negatives[0].rating == 0.0);
    CHECK(b.negatives[0].doc == -1);
    CHECK(b.skipped == 1);  // city 1 has a single item, already consumed
    CHECK(b.positives.size() == 2);
    CHECK(b.positives[0].rating == 1.0);
    CHECK(b.positives[0].doc == 0);
  }
}

TEST_CASE("negatives never collide with positives") {
  const auto data = generate_synthetic(40, 30, 3, 8, 30, 3);
  const Corpus& c = data.corpus;
  std::set<std::pair<Id, Id>> pos;
  for (const auto& x : c.interactions) pos.insert({x.user, x.item});
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto b = sample_negatives(c, all_of(c), seed);
    CHECK(b.negatives.size() + b.skipped == b.positives.size());
    for (std::size_t n = 0; n < b.negatives.size(); ++n) {
      const auto& neg = b.negatives[n];
      CHECK_FALSE(pos.contains({neg.user, neg.item}));
    }
    CHECK(b.all().size() == b.positives.size() + b.negatives.size());
  }
  // Also-consumed items are excluded too.
  const auto h = holdout_per_user(c, 2, 1);
  NegativeSampler sampler(c, h.train, h.test);
  const auto b = sampler.sample(5);
  for (const auto& neg : b.negatives) CHECK_FALSE(pos.contains({neg.user, neg.item}));
}

TEST_CASE("negatives are uniform over eligible items") {
  // 50 users in a city of 8 items; each consumed items 0 and 1.
  std::vector<std::pair<Id, Id>> records;
  for (Id u = 0; u < 50; ++u) {
    records.push_back({u, 0});
    records.push_back({u, 1});
  }
  const Corpus c = make_corpus(50, std::vector<Id>(8, 0), 1, records);
  NegativeSampler sampler(c, all_of(c));
  CHECK(sampler.eligible(0, 0) == std::vector<Id>{2, 3, 4, 5, 6, 7});
  std::map<Id, double> freq;
  const int epochs = 10000;
  for (int e = 1; e <= epochs; ++e) {
    for (const auto& neg : sampler.sample(e).negatives) freq[neg.item] += 1;
  }
  const double expected = 100.0 * epochs / 6;
  CHECK(freq.size() == 6);
  for (const auto& [item, f] : freq) CHECK(std::abs(f - expected) / expected < 0.02);
}

TEST_CASE("batches are seed-determined") {
  const auto data = generate_synthetic(20, 60, 2, 5, 20, 4);
  const auto a = sample_negatives(data.corpus, all_of(data.corpus), 9);
  const auto b = sample_negatives(data.corpus, all_of(data.corpus), 9);
  const auto d = sample_negatives(data.corpus, all_of(data.corpus), 10);
  auto items = [](const BinaryBatch& x) {
    std::vector<Id> out;
    for (const auto& n : x.negatives) out.push_back(n.item);
    return out;
  };
  CHECK(items(a) == items(b));
  CHECK(items(a) != items(d));
}

Hyperparams binary_hyper(std::size_t iters) {
  Hyperparams h;
  h.k = 3;
  h.mode = Mode::kBinary;
  h.lambda_l = 0.3;
  h.lambda_p = 1.0;
  h.max_iters = iters;
  h.s1_sweeps = 2;
  return h;
}

TEST_CASE("fit_binary") {
  SyntheticOptions o;
  o.users = 40;
  o.items = 30;
  o.k = 3;
  o.reviews_per_user = 8;
  o.vocab_size = 30;
  const auto data = generate_synthetic(o);
  const auto train = all_of(data.corpus);

  const JftModel zero = fit_binary(data.corpus, train, {}, binary_hyper(0));
  CHECK(zero.trace.empty());
  const auto init = initial_model(
      data.corpus, sample_negatives(data.corpus, train, mix_seed(1, 1)).all(), zero.hyper);
  CHECK(zero.params == init.params);

  const JftModel a = fit_binary(data.corpus, train, {}, binary_hyper(5));
  const JftModel b = fit_binary(data.corpus, train, {}, binary_hyper(5));
  CHECK(a.trace.size() == 5);
  CHECK(a.params == b.params);
  CHECK(a.topics.z == b.topics.z);
  CHECK(a.hyper.mode == Mode::kBinary);

  // Warm start continues from the given parameters.
  const JftModel w = fit_binary(data.corpus, train, {}, binary_hyper(0), &a);
  CHECK(w.params == a.params);
  Hyperparams bad = binary_hyper(2);
  bad.k = 4;
  CHECK_THROWS_AS(fit_binary(data.corpus, train, {}, bad, &a), ValidationError);
}

TEST_CASE("recommend") {
  SyntheticOptions o;
  o.users = 30;
  o.items = 45;
  o.k = 3;
  o.reviews_per_user = 5;
  o.vocab_size = 30;
  const auto data = generate_synthetic(o);
  const Corpus& c = data.corpus;
  const JftModel& m = data.planted;
  std::vector<std::unordered_set<Id>> seen(c.num_users());
  for (const auto& x : c.interactions) seen[x.user].insert(x.item);

  for (Id u = 0; u < c.num_users(); ++u) {
    const Id city = c.user_city[u];
    const auto r = recommend(m, c, u, city, 5, seen[u]);
    CHECK(r.items.size() == 5);
    CHECK_FALSE(r.short_list);
    // Full-sort oracle.
    std::vector<RankedItem> all;
    for (Id i = 0; i < c.num_items(); ++i) {
      if (c.item_city[i] == city && !seen[u].contains(i)) all.push_back({i, score(m, u, i)});
    }
    std::sort(all.begin(), all.end(), [](const RankedItem& a, const RankedItem& b) {
      return a.score != b.score ? a.score > b.score : a.item < b.item;
    });
    all.resize(5);
    CHECK(r.items == all);
  }

  JftModel flat;
  flat.hyper.k = 3;
  flat.params = FactorParams::zeros(c.num_users(), c.num_items(), 3);
  flat.params.alpha = 2;
  const auto r = recommend(flat, c, 0, 0, 4, {});
  REQUIRE(r.items.size() == 4);
  for (Id n = 0; n < 4; ++n) CHECK(r.items[n].item == n);

  const auto short_list = recommend(flat, c, 0, 0, 1000, {});
  CHECK(short_list.short_list);
  CHECK(short_list.items.size() == 15);
  CHECK_THROWS_AS(recommend(flat, c, 999, 0, 5, {}), LookupError);
  CHECK_THROWS_AS(recommend(flat, c, 0, 99, 5, {}), LookupError);
}

}  // namespace
}  // namespace jft
