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
#include <string>
#include <vector>

#include <doctest.h>

#include "jft/corpus.h"
#include "jft/errors.h"
#include "jft/random.h"
#include "jft/synthetic.h"
#include "jft/topic.h"

namespace jft {
namespace {

Corpus docs_corpus(const std::vector<std::vector<Id>>& docs, std::size_t v) {
  Corpus c;
  c.cities.intern("c");
  for (std::size_t w = 0; w < v; ++w) c.vocab.intern("w" + std::to_string(w));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Interaction x;
    x.user = c.users.intern("u" + std::to_string(d));
    x.item = c.items.intern("i" + std::to_string(d));
    x.rating = 3;
    x.tokens = docs[d];
    c.interactions.push_back(x);
    c.user_city.push_back(0);
    c.item_city.push_back(0);
  }
  return c;
}

std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double s = 0;
  for (auto& x : p) s += x = -std::log(1.0 - rng.uniform());
  for (auto& x : p) x /= s;
  return p;
}

TEST_CASE("log_likelihood closed forms") {
  {
    const Corpus c = docs_corpus({{0}}, 2);
    TopicState s = make_topic_state(2, 2);
    s.phi(0, 0) = 1.0;
    s.phi(0, 1) = 0.0;
    s.z = {{0}};
    std::vector<std::vector<double>> theta{{1.0, 0.0}};
    CHECK(log_likelihood(c, theta, s) == 0.0);
  }
  {
    const std::size_t k = 3, v = 7, len = 11;
    const Corpus c = docs_corpus({std::vector<Id>(len, 2)}, v);
    TopicState s = make_topic_state(k, v);
    init_assignments(s, c, std::vector<std::size_t>{0}, 1);
    std::vector<std::vector<double>> theta{std::vector<double>(k, 1.0 / k)};
    CHECK(log_likelihood(c, theta, s) ==
          doctest::Approx(len * (std::log(1.0 / k) + std::log(1.0 / v))));
  }
}

TEST_CASE("log_likelihood matches a product-then-log oracle") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng.index(3), v = 1 + rng.index(5), n = 1 + rng.index(4);
    std::vector<std::vector<Id>> docs(n);
    for (auto& d : docs) {
      d.resize(rng.index(6));
      for (auto& w : d) w = static_cast<Id>(rng.index(v));
    }
    const Corpus c = docs_corpus(docs, v);
    TopicState s = make_topic_state(k, v);
    for (std::size_t r = 0; r < k; ++r) {
      const auto p = random_simplex(v, rng);
      std::copy(p.begin(), p.end(), s.phi.row(r).begin());
    }
    std::vector<std::vector<double>> theta;
    for (std::size_t d = 0; d < n; ++d) theta.push_back(random_simplex(k, rng));
    std::vector<std::size_t> all(n);
    for (std::size_t d = 0; d < n; ++d) all[d] = d;
    init_assignments(s, c, all, rng.index(1000));

    long double product = 1.0L;
    for (std::size_t d = 0; d < n; ++d) {
      for (std::size_t j = 0; j < docs[d].size(); ++j) {
        const auto z = s.z[d][j];
        product *= static_cast<long double>(theta[d][z]) * s.phi(z, docs[d][j]);
      }
    }
    const double oracle = static_cast<double>(std::log(product));
    CHECK(std::abs(log_likelihood(c, theta, s) - oracle) < 1e-10);
  }
}

TEST_CASE("log_likelihood error paths") {
  const Corpus c = docs_corpus({{0, 1}}, 2);
  TopicState s = make_topic_state(2, 2);
  s.z = {{0, 1}};
  std::vector<std::vector<double>> bad{{1.0}};
  CHECK_THROWS_AS(log_likelihood(c, bad, s), ValidationError);
  std::vector<std::vector<double>> ok{{0.5, 0.5}};
  std::vector<std::vector<double>> two{{0.5, 0.5}, {0.5, 0.5}};
  CHECK_THROWS_AS(log_likelihood(c, two, s), ValidationError);
  s.normalized = false;
  CHECK_THROWS_AS(log_likelihood(c, ok, s), ValidationError);
  s.normalized = true;
  s.z = {{0}};
  CHECK_THROWS_AS(log_likelihood(c, ok, s), ValidationError);
}

TEST_CASE("log_likelihood floors zero probabilities") {
  const Corpus c = docs_corpus({{1}}, 2);
  TopicState s = make_topic_state(1, 2);
  s.phi(0, 0) = 1.0;
  s.phi(0, 1) = 0.0;
  s.z = {{0}};
  std::vector<std::vector<double>> theta{{1.0}};
  CHECK(log_likelihood(c, theta, s) == doctest::Approx(std::log(kLikelihoodFloor)));
}

TEST_CASE("sample_topics distributions") {
  SUBCASE("degenerate theta") {
    const Corpus c = docs_corpus({{0, 1, 2, 3, 1}}, 4);
    TopicState s = make_topic_state(3, 4);
    std::vector<std::vector<double>> theta{{1.0, 0.0, 0.0}};
    sample_topics(c, std::vector<std::size_t>{0}, theta, s, 4);
    for (auto z : s.z[0]) CHECK(z == 0);
  }
  SUBCASE("uniform frequencies") {
    const std::size_t k = 4;
    std::vector<std::vector<Id>> docs(100, std::vector<Id>(1000, 0));
    const Corpus c = docs_corpus(docs, 3);
    TopicState s = make_topic_state(k, 3);
    std::vector<std::vector<double>> theta(100, std::vector<double>(k, 0.25));
    std::vector<std::size_t> all(100);
    for (std::size_t d = 0; d < 100; ++d) all[d] = d;
    sample_topics(c, all, theta, s, 9);
    std::vector<double> freq(k, 0.0);
    for (const auto& z : s.z) for (auto t : z) freq[t] += 1e-5;
    for (double f : freq) CHECK(std::abs(f - 0.25) < 0.01);
  }
  SUBCASE("normalized weights") {
    std::vector<std::vector<Id>> docs(100, std::vector<Id>(1000, 0));
    const Corpus c = docs_corpus(docs, 2);
    TopicState s = make_topic_state(2, 2);
    s.phi(0, 0) = 0.9;
    s.phi(1, 0) = 0.1;
    std::vector<std::vector<double>> theta(100, std::vector<double>{0.5, 0.5});
    std::vector<std::size_t> all(100);
    for (std::size_t d = 0; d < 100; ++d) all[d] = d;
    const auto stats = sample_topics(c, all, theta, s, 10);
    CHECK(stats.tokens == 100000);
    CHECK(stats.fallbacks == 0);
    double zero = 0;
    for (const auto& z : s.z) for (auto t : z) zero += t == 0;
    CHECK(std::abs(zero / 1e5 - 0.9) < 0.01);
  }
}

TEST_CASE("sample_topics falls back to theta for massless words") {
  const Corpus c = docs_corpus({{1, 1, 0}}, 2);
  TopicState s = make_topic_state(2, 2);
  s.phi(0, 1) = 0.0;
  s.phi(1, 1) = 0.0;
  std::vector<std::vector<double>> theta{{0.0, 1.0}};
  const auto stats = sample_topics(c, std::vector<std::size_t>{0}, theta, s, 1);
  CHECK(stats.fallbacks == 2);
  CHECK(s.z[0] == std::vector<std::uint32_t>{1, 1, 1});
}

TEST_CASE("sample_topics is seed-determined and thread-count independent") {
  const auto data = generate_synthetic(30, 20, 3, 5, 30, 2);
  TopicState s = make_topic_state(3, data.corpus.vocab_size());
  std::vector<std::size_t> all(data.corpus.size());
  std::vector<std::vector<double>> theta;
  for (std::size_t d = 0; d < all.size(); ++d) {
    all[d] = d;
    theta.push_back(std::vector<double>(3, 1.0 / 3));
  }
  TopicState a = s, b = s, c = s;
  sample_topics(data.corpus, all, theta, a, 5, 1);
  sample_topics(data.corpus, all, theta, b, 5, 1);
  sample_topics(data.corpus, all, theta, c, 5, 3);
  CHECK(a.z == b.z);
  CHECK(a.z == c.z);
  TopicState d = s;
  sample_topics(data.corpus, all, theta, d, 6, 1);
  CHECK(a.z != d.z);
}

TEST_CASE("normalize_phi") {
  TopicState s = make_topic_state(2, 4);
  for (std::size_t w = 0; w < 4; ++w) CHECK(s.phi(0, w) == 0.25);
  s = make_topic_state(1, 2);
  s.scores(0, 0) = 1;
  s.scores(0, 1) = 2;
  normalize_phi(s);
  const double e = std::exp(1.0);
  CHECK(s.phi(0, 0) == doctest::Approx(1 / (1 + e)).epsilon(1e-14));
  CHECK(s.phi(0, 1) == doctest::Approx(e / (1 + e)).epsilon(1e-14));

  Rng rng(11);
  TopicState r = make_topic_state(5, 50);
  for (auto& x : r.scores.data()) x = rng.normal(0, 300);
  r = normalize_phi(std::move(r));
  for (std::size_t k = 0; k < 5; ++k) {
    double sum = 0;
    for (double p : r.phi.row(k)) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    const auto sc = r.scores.row(k);
    const auto ph = r.phi.row(k);
    CHECK(std::max_element(sc.begin(), sc.end()) - sc.begin() ==
          std::max_element(ph.begin(), ph.end()) - ph.begin());
  }
}

TEST_CASE("top_words") {
  SyntheticOptions o;
  o.users = 20;
  o.items = 20;
  o.k = 4;
  o.vocab_size = 80;
  const auto data = generate_synthetic(o);
  const auto words = top_words(data.planted.topics, data.corpus.vocab, 10);
  REQUIRE(words.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    REQUIRE(words[k].size() == 10);
    const auto [lo, hi] = topic_block(k, 4, 80);
    for (std::size_t r = 0; r < 10; ++r) {
      const Id w = data.corpus.vocab.at(words[k][r].first);
      CHECK(w >= lo);
      CHECK(w < hi);
      if (r > 0) CHECK(words[k][r].second <= words[k][r - 1].second);
    }
    // Equal mass inside a block: ties broken by index.
    CHECK(data.corpus.vocab.at(words[k][0].first) == lo);
  }
  const auto all = top_words(data.planted.topics, data.corpus.vocab, 1000);
  CHECK(all[0].size() == 80);
}

}  // namespace
}  // namespace jft
