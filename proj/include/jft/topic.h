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

#ifndef JFT_TOPIC_H_
#define JFT_TOPIC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jft/corpus.h"
#include "jft/linalg.h"

namespace jft {

// Probabilities below this are floored before taking logs.
inline constexpr double kLikelihoodFloor = 1e-12;

// Topic-word scores and word-topic assignments.
//
// `scores` are unconstrained; `phi` holds their row-wise softmax and is only
// meaningful while `normalized` is set. Anything that changes `scores` must
// clear the flag, and normalize_phi restores it.
struct TopicState {
  Matrix scores;  // K x V
  Matrix phi;     // K x V
  bool normalized = false;
  // One topic per token, indexed by interaction; empty for records without
  // a document in the current model.
  std::vector<std::vector<std::uint32_t>> z;

  std::size_t k() const { return scores.rows(); }
  std::size_t vocab_size() const { return scores.cols(); }

  // Throws ValidationError unless normalized.
  const Matrix& probabilities() const;
};

// Zero scores (uniform phi) and no assignments.
TopicState make_topic_state(std::size_t k, std::size_t vocab_size);

// Uniformly random topics for the tokens of `docs`.
void init_assignments(TopicState& state, const Corpus& corpus,
                      std::span<const std::size_t> docs, std::uint64_t seed);

// phi <- row-wise softmax(scores). Rows become stochastic and keep the
// ordering of their scores.
void normalize_phi(TopicState& state);
TopicState normalize_phi(TopicState&& state);

// Sum over docs and positions of log theta[d][z] + log phi[z][w]. theta is
// given per entry of `docs`. Throws ValidationError on shape mismatches.
double log_likelihood(const Corpus& corpus, std::span<const std::size_t> docs,
                      std::span<const std::vector<double>> theta,
                      const TopicState& state);
// Every interaction is a document.
double log_likelihood(const Corpus& corpus,
                      std::span<const std::vector<double>> theta,
                      const TopicState& state);

struct SamplingStats {
  std::size_t tokens = 0;
  // Tokens whose word had zero mass under every topic; those were drawn from
  // theta alone.
  std::size_t fallbacks = 0;
};

// Redraws z[d][j] with probability proportional to theta[d][k] * phi[k][w].
// Document d uses the random substream mix_seed(seed, d), so results do not
// depend on `jobs`.
SamplingStats sample_topics(const Corpus& corpus,
                            std::span<const std::size_t> docs,
                            std::span<const std::vector<double>> theta,
                            TopicState& state, std::uint64_t seed,
                            unsigned jobs = 1);

// For each topic, the n highest-probability words (ties: lower index first).
std::vector<std::vector<std::pair<std::string, double>>> top_words(
    const TopicState& state, const IdMap& vocab, std::size_t n);

}  // namespace jft

#endif  // JFT_TOPIC_H_
