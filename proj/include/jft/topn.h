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

#ifndef JFT_TOPN_H_
#define JFT_TOPN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "jft/corpus.h"
#include "jft/model.h"

namespace jft {

// Positives (rating 1, with their reviews) and one sampled same-city negative
// (rating 0, no review) per positive.
struct BinaryBatch {
  std::vector<Observation> positives;
  std::vector<Observation> negatives;
  std::size_t skipped = 0;  // positives whose city offered no eligible item

  // Positives followed by negatives.
  std::vector<Observation> all() const;
};

// Draws negatives uniformly from the city of each positive, excluding every
// item the user has among `positives` or `also_consumed`.
class NegativeSampler {
 public:
  static constexpr std::size_t kMaxAttempts = 1000;

  NegativeSampler(const Corpus& corpus, std::span<const std::size_t> positives,
                  std::span<const std::size_t> also_consumed = {});

  // One batch, fully determined by seed.
  BinaryBatch sample(std::uint64_t seed) const;

  // Items of `city` the user may receive as a negative.
  std::vector<Id> eligible(Id user, Id city) const;

 private:
  const Corpus& corpus_;
  std::vector<std::size_t> positives_;
  std::vector<std::vector<Id>> city_items_;
  std::vector<std::unordered_set<Id>> consumed_;
};

BinaryBatch sample_negatives(const Corpus& corpus,
                             std::span<const std::size_t> positives,
                             std::uint64_t seed);

// Binary-input training. Every epoch draws a fresh batch and runs one
// alternating round on it; reviews attach to positives only. Validation
// positives get one fixed set of negatives. hyper.max_iters is the epoch
// budget; 0 returns the initialization. If warm_start is given its
// parameters replace the random initialization.
JftModel fit_binary(const Corpus& corpus, std::span<const std::size_t> train,
                    std::span<const std::size_t> validation,
                    const Hyperparams& hyper,
                    const JftModel* warm_start = nullptr);

struct RankedItem {
  Id item = 0;
  double score = 0.0;
  bool operator==(const RankedItem&) const = default;
};

struct Recommendation {
  std::vector<RankedItem> items;  // descending score, ties by item index
  bool short_list = false;        // fewer than n candidates existed
};

// Top-n items of `city` (all items when city is empty) that are not in
// `exclude`.
Recommendation recommend(const JftModel& model, const Corpus& corpus, Id user,
                         std::optional<Id> city, std::size_t n,
                         const std::unordered_set<Id>& exclude);

}  // namespace jft

#endif  // JFT_TOPN_H_
