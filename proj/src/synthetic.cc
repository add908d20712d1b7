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

#include "jft/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "jft/bridge.h"
#include "jft/errors.h"
#include "jft/random.h"

namespace jft {

namespace {

std::string label(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04zu", prefix, n);
  return buf;
}

// Weighted draw of `count` distinct entries of `pool` (removes them).
std::vector<Id> draw_distinct(std::vector<Id> pool, std::vector<double> weight,
                              std::size_t count, Rng& rng) {
  std::vector<Id> out;
  while (out.size() < count && !pool.empty()) {
    std::size_t pick = rng.categorical(weight);
    if (pick >= pool.size()) pick = rng.index(pool.size());
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

}  // namespace

std::pair<std::size_t, std::size_t> topic_block(std::size_t t, std::size_t k,
                                                std::size_t vocab_size) {
  return {t * vocab_size / k, (t + 1) * vocab_size / k};
}

SyntheticData generate_synthetic(const SyntheticOptions& o) {
  if (o.users == 0 || o.items == 0 || o.k == 0 || o.reviews_per_user == 0 ||
      o.vocab_size == 0 || o.cities == 0 || o.doc_length == 0) {
    throw ValidationError("synthetic corpus sizes must be positive");
  }
  if (o.vocab_size < o.k) {
    throw ValidationError("vocabulary must have at least one word per topic");
  }
  if (o.cities > o.items) throw ValidationError("more cities than items");

  const std::size_t K = o.k;
  Rng rng(o.seed);
  SyntheticData out;
  Corpus& c = out.corpus;
  JftModel& m = out.planted;
  m.hyper.k = K;
  m.hyper.seed = o.seed;
  m.hyper.strategy = Strategy::kJft;

  FactorParams& p = m.params;
  p = FactorParams::zeros(o.users, o.items, K);
  p.alpha = o.alpha;
  const double factor_sd = o.factor_sd > 0.0
                               ? o.factor_sd
                               : 1.0 / std::sqrt(static_cast<double>(K));
  for (auto& b : p.beta_user) b = rng.normal(0.0, o.bias_sd);
  for (auto& b : p.beta_item) b = rng.normal(0.0, o.bias_sd);
  for (auto& g : p.gamma_user.data()) g = rng.normal(0.0, factor_sd);
  for (auto& g : p.gamma_item.data()) g = rng.normal(0.0, factor_sd);

  TopicState& t = m.topics;
  t = make_topic_state(K, o.vocab_size);
  t.phi = Matrix(K, o.vocab_size);
  for (std::size_t k = 0; k < K; ++k) {
    auto [lo, hi] = topic_block(k, K, o.vocab_size);
    const double mass = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t w = 0; w < o.vocab_size; ++w) {
      const bool in = w >= lo && w < hi;
      t.phi(k, w) = in ? mass : 0.0;
      t.scores(k, w) = in ? std::log(mass) : -700.0;
    }
  }
  t.normalized = true;

  for (std::size_t n = 0; n < o.users; ++n) c.users.intern(label('u', n));
  for (std::size_t n = 0; n < o.items; ++n) c.items.intern(label('i', n));
  for (std::size_t n = 0; n < o.cities; ++n) c.cities.intern(label('c', n));
  for (std::size_t n = 0; n < o.vocab_size; ++n) c.vocab.intern(label('w', n));

  std::vector<std::vector<Id>> city_items(o.cities);
  c.item_city.resize(o.items);
  for (Id i = 0; i < o.items; ++i) {
    c.item_city[i] = static_cast<Id>(i * o.cities / o.items);
    city_items[c.item_city[i]].push_back(i);
  }
  c.user_city.resize(o.users);

  const double rating_noise = o.noise_sd;
  for (Id u = 0; u < o.users; ++u) {
    const Id home = static_cast<Id>(rng.index(o.cities));
    c.user_city[u] = home;
    auto affinity = [&](const std::vector<Id>& pool) {
      std::vector<double> w;
      for (Id i : pool) {
        const double s = p.beta_item[i] +
                         dot(p.gamma_user.row(u), p.gamma_item.row(i));
        w.push_back(std::exp(o.affinity * s));
      }
      return w;
    };
    std::vector<Id> chosen;
    std::size_t home_count = o.reviews_per_user;
    const bool traveler =
        o.cities > 1 && rng.uniform() < o.traveler_fraction;
    if (traveler) {
      Id away = static_cast<Id>(rng.index(o.cities - 1));
      if (away >= home) ++away;
      const std::size_t n_away = std::min(o.away_records, o.reviews_per_user);
      auto picks = draw_distinct(city_items[away], affinity(city_items[away]),
                                 n_away, rng);
      home_count -= picks.size();
      chosen = std::move(picks);
    }
    auto picks = draw_distinct(city_items[home], affinity(city_items[home]),
                               home_count, rng);
    chosen.insert(chosen.end(), picks.begin(), picks.end());
    std::sort(chosen.begin(), chosen.end());

    for (Id i : chosen) {
      Interaction x;
      x.user = u;
      x.item = i;
      x.city = c.item_city[i];
      const double r = predict_rating(p, u, i) + rng.normal(0.0, rating_noise);
      x.rating = std::clamp(std::round(r), 1.0, 5.0);
      const auto theta =
          product_randomize(p.gamma_user.row(u), p.gamma_item.row(i));
      std::vector<std::uint32_t> z(o.doc_length);
      x.tokens.resize(o.doc_length);
      for (std::size_t j = 0; j < o.doc_length; ++j) {
        std::size_t k = rng.categorical(theta);
        if (k >= K) k = rng.index(K);
        auto [lo, hi] = topic_block(k, K, o.vocab_size);
        z[j] = static_cast<std::uint32_t>(k);
        x.tokens[j] = static_cast<Id>(lo + rng.index(hi - lo));
      }
      c.interactions.push_back(std::move(x));
      t.z.push_back(std::move(z));
    }
  }
  return out;
}

SyntheticData generate_synthetic(std::size_t users, std::size_t items,
                                 std::size_t k, std::size_t reviews_per_user,
                                 std::size_t vocab_size, std::uint64_t seed) {
  SyntheticOptions o;
  o.users = users;
  o.items = items;
  o.k = k;
  o.reviews_per_user = reviews_per_user;
  o.vocab_size = vocab_size;
  o.seed = seed;
  return generate_synthetic(o);
}

}  // namespace jft
