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

#ifndef JFT_SYNTHETIC_H_
#define JFT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include "jft/corpus.h"
#include "jft/model.h"

namespace jft {

struct SyntheticOptions {
  std::size_t users = 200;
  std::size_t items = 100;
  std::size_t k = 5;
  std::size_t reviews_per_user = 20;
  std::size_t vocab_size = 500;
  std::uint64_t seed = 1;

  std::size_t cities = 3;         // items are split into contiguous blocks
  std::size_t doc_length = 40;    // words per review
  double traveler_fraction = 0.2; // users with part of their records abroad
  std::size_t away_records = 6;   // records a traveler has in one other city
  double alpha = 3.5;             // global offset (keeps ratings inside 1..5)
  double bias_sd = 0.5;
  double factor_sd = 0.0;         // 0 means 1 / sqrt(k)
  double noise_sd = 0.5;
  // Items are chosen with probability proportional to
  // exp(affinity * (beta_i + gamma_u . gamma_i)); 0 picks uniformly.
  double affinity = 2.0;
};

struct SyntheticData {
  Corpus corpus;
  // Ground truth. topics.z holds the planted assignment of every word.
  JftModel planted;
};

// Ratings are clip(round(rate(u, i) + noise), 1, 5). Each word of a review
// draws its topic from softmax(gamma_u * gamma_i) and its word uniformly from
// that topic's block of vocab_size / k words. Deterministic given the seed.
SyntheticData generate_synthetic(const SyntheticOptions& options);

SyntheticData generate_synthetic(std::size_t users, std::size_t items,
                                 std::size_t k, std::size_t reviews_per_user,
                                 std::size_t vocab_size, std::uint64_t seed);

// Word range [begin, end) of topic t's block.
std::pair<std::size_t, std::size_t> topic_block(std::size_t t, std::size_t k,
                                                std::size_t vocab_size);

}  // namespace jft

#endif  // JFT_SYNTHETIC_H_
