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

#include "jft/topic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "jft/errors.h"
#include "jft/random.h"

namespace jft {

const Matrix& TopicState::probabilities() const {
  if (!normalized) {
    throw ValidationError("topic-word scores have not been normalized");
  }
  return phi;
}

TopicState make_topic_state(std::size_t k, std::size_t vocab_size) {
  TopicState s;
  s.scores = Matrix(k, vocab_size, 0.0);
  s.phi = Matrix(k, vocab_size, 0.0);
  normalize_phi(s);
  return s;
}

void init_assignments(TopicState& state, const Corpus& corpus,
                      std::span<const std::size_t> docs, std::uint64_t seed) {
  state.z.resize(corpus.size());
  for (auto d : docs) {
    Rng rng(mix_seed(seed, d));
    const auto& tokens = corpus.interactions.at(d).tokens;
    auto& z = state.z[d];
    z.resize(tokens.size());
    for (auto& t : z) t = static_cast<std::uint32_t>(rng.index(state.k()));
  }
}

void normalize_phi(TopicState& state) {
  if (state.phi.rows() != state.scores.rows() ||
      state.phi.cols() != state.scores.cols()) {
    state.phi = Matrix(state.scores.rows(), state.scores.cols());
  }
  for (std::size_t k = 0; k < state.k(); ++k) {
    auto p = softmax(state.scores.row(k));
    std::copy(p.begin(), p.end(), state.phi.row(k).begin());
  }
  state.normalized = true;
}

TopicState normalize_phi(TopicState&& state) {
  normalize_phi(state);
  return std::move(state);
}

namespace {

double floored_log(double p) { return std::log(std::max(p, kLikelihoodFloor)); }

void check_shapes(const Corpus& corpus, std::span<const std::size_t> docs,
                  std::span<const std::vector<double>> theta,
                  const TopicState& state) {
  if (theta.size() != docs.size()) {
    throw ValidationError("theta count does not match document count");
  }
  if (state.vocab_size() < corpus.vocab_size()) {
    throw ValidationError("topic state vocabulary smaller than corpus");
  }
  for (std::size_t n = 0; n < docs.size(); ++n) {
    if (theta[n].size() != state.k()) {
      throw ValidationError("theta of document " + std::to_string(docs[n]) +
                            " has wrong length");
    }
    if (docs[n] >= corpus.size()) {
      throw ValidationError("document index out of range");
    }
  }
}

}  // namespace

double log_likelihood(const Corpus& corpus, std::span<const std::size_t> docs,
                      std::span<const std::vector<double>> theta,
                      const TopicState& state) {
  check_shapes(corpus, docs, theta, state);
  const Matrix& phi = state.probabilities();
  double ll = 0.0;
  for (std::size_t n = 0; n < docs.size(); ++n) {
    const auto d = docs[n];
    const auto& tokens = corpus.interactions[d].tokens;
    if (d >= state.z.size() || state.z[d].size() != tokens.size()) {
      throw ValidationError("document " + std::to_string(d) +
                            " lacks topic assignments");
    }
    const auto& z = state.z[d];
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (z[j] >= state.k()) throw ValidationError("topic index out of range");
      ll += floored_log(theta[n][z[j]]) + floored_log(phi(z[j], tokens[j]));
    }
  }
  return ll;
}

double log_likelihood(const Corpus& corpus,
                      std::span<const std::vector<double>> theta,
                      const TopicState& state) {
  std::vector<std::size_t> docs(corpus.size());
  std::iota(docs.begin(), docs.end(), std::size_t{0});
  return log_likelihood(corpus, docs, theta, state);
}

SamplingStats sample_topics(const Corpus& corpus,
                            std::span<const std::size_t> docs,
                            std::span<const std::vector<double>> theta,
                            TopicState& state, std::uint64_t seed,
                            unsigned jobs) {
  check_shapes(corpus, docs, theta, state);
  const Matrix& phi = state.probabilities();
  const std::size_t k = state.k();
  state.z.resize(corpus.size());

  auto run = [&](std::size_t begin, std::size_t end, SamplingStats& stats) {
    std::vector<double> weights(k);
    for (std::size_t n = begin; n < end; ++n) {
      const auto d = docs[n];
      const auto& tokens = corpus.interactions[d].tokens;
      auto& z = state.z[d];
      z.resize(tokens.size());
      Rng rng(mix_seed(seed, d));
      for (std::size_t j = 0; j < tokens.size(); ++j) {
        for (std::size_t t = 0; t < k; ++t) {
          weights[t] = theta[n][t] * phi(t, tokens[j]);
        }
        std::size_t pick = rng.categorical(weights);
        if (pick == k) {
          ++stats.fallbacks;
          pick = rng.categorical(theta[n]);
          if (pick == k) pick = 0;
        }
        z[j] = static_cast<std::uint32_t>(pick);
        ++stats.tokens;
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(docs.size())));
  std::vector<SamplingStats> partial(workers);
  if (workers == 1) {
    run(0, docs.size(), partial[0]);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (docs.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(docs.size(), w * chunk);
      const std::size_t end = std::min(docs.size(), begin + chunk);
      threads.emplace_back(run, begin, end, std::ref(partial[w]));
    }
    for (auto& t : threads) t.join();
  }
  SamplingStats total;
  for (const auto& p : partial) {
    total.tokens += p.tokens;
    total.fallbacks += p.fallbacks;
  }
  return total;
}

std::vector<std::vector<std::pair<std::string, double>>> top_words(
    const TopicState& state, const IdMap& vocab, std::size_t n) {
  const Matrix& phi = state.probabilities();
  const std::size_t v = std::min(state.vocab_size(), vocab.size());
  n = std::min(n, v);
  std::vector<std::vector<std::pair<std::string, double>>> out(state.k());
  std::vector<Id> order(v);
  for (std::size_t k = 0; k < state.k(); ++k) {
    std::iota(order.begin(), order.end(), Id{0});
    std::partial_sort(order.begin(), order.begin() + n, order.end(),
                      [&](Id a, Id b) {
                        if (phi(k, a) != phi(k, b)) return phi(k, a) > phi(k, b);
                        return a < b;
                      });
    for (std::size_t r = 0; r < n; ++r) {
      out[k].emplace_back(vocab.name(order[r]), phi(k, order[r]));
    }
  }
  return out;
}

}  // namespace jft
