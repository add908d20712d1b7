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

#include "jft/topn.h"

#include <algorithm>

#include "jft/errors.h"
#include "jft/fit.h"
#include "jft/random.h"

namespace jft {

std::vector<Observation> BinaryBatch::all() const {
  std::vector<Observation> out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

NegativeSampler::NegativeSampler(const Corpus& corpus,
                                 std::span<const std::size_t> positives,
                                 std::span<const std::size_t> also_consumed)
    : corpus_(corpus),
      positives_(positives.begin(), positives.end()),
      city_items_(items_by_city(corpus)),
      consumed_(corpus.num_users()) {
  for (auto n : positives_) {
    const auto& x = corpus.interactions.at(n);
    consumed_[x.user].insert(x.item);
  }
  for (auto n : also_consumed) {
    const auto& x = corpus.interactions.at(n);
    consumed_[x.user].insert(x.item);
  }
}

std::vector<Id> NegativeSampler::eligible(Id user, Id city) const {
  std::vector<Id> out;
  for (Id j : city_items_.at(city)) {
    if (!consumed_.at(user).contains(j)) out.push_back(j);
  }
  return out;
}

BinaryBatch NegativeSampler::sample(std::uint64_t seed) const {
  BinaryBatch batch;
  batch.positives.reserve(positives_.size());
  batch.negatives.reserve(positives_.size());
  Rng rng(seed);
  for (auto n : positives_) {
    const auto& x = corpus_.interactions[n];
    batch.positives.push_back({x.user, x.item, 1.0, static_cast<std::int64_t>(n)});
    const auto& pool = city_items_[x.city];
    const auto& seen = consumed_[x.user];
    std::optional<Id> pick;
    for (std::size_t a = 0; a < kMaxAttempts && !pick; ++a) {
      const Id j = pool[rng.index(pool.size())];
      if (!seen.contains(j)) pick = j;
    }
    if (!pick) {
      const auto rest = eligible(x.user, x.city);
      if (rest.empty()) {
        ++batch.skipped;
        continue;
      }
      pick = rest[rng.index(rest.size())];
    }
    batch.negatives.push_back({x.user, *pick, 0.0, -1});
  }
  return batch;
}

BinaryBatch sample_negatives(const Corpus& corpus,
                             std::span<const std::size_t> positives,
                             std::uint64_t seed) {
  return NegativeSampler(corpus, positives).sample(seed);
}

JftModel fit_binary(const Corpus& corpus, std::span<const std::size_t> train,
                    std::span<const std::size_t> validation,
                    const Hyperparams& hyper, const JftModel* warm_start) {
  if (train.empty()) throw ValidationError("training set is empty");
  Hyperparams h = hyper;
  h.mode = Mode::kBinary;
  const NegativeSampler sampler(corpus, train);
  std::vector<Observation> current = sampler.sample(mix_seed(h.seed, 1)).all();

  JftModel model = initial_model(corpus, current, h);
  if (warm_start != nullptr) {
    if (warm_start->params.num_users() != corpus.num_users() ||
        warm_start->params.num_items() != corpus.num_items() ||
        warm_start->params.k() != h.k) {
      throw ValidationError("warm-start model does not match corpus or K");
    }
    model.params = warm_start->params;
  }

  // Validation negatives are drawn once and avoid training positives too.
  std::vector<Observation> held;
  if (!validation.empty()) {
    held = NegativeSampler(corpus, validation, train)
               .sample(mix_seed(h.seed, 3))
               .all();
  }

  internal::run_fit(
      corpus, model,
      [&](std::size_t epoch) -> std::span<const Observation> {
        if (epoch > 1) current = sampler.sample(mix_seed(h.seed, epoch)).all();
        return current;
      },
      held, false);
  return model;
}

Recommendation recommend(const JftModel& model, const Corpus& corpus, Id user,
                         std::optional<Id> city, std::size_t n,
                         const std::unordered_set<Id>& exclude) {
  if (user >= model.params.num_users()) {
    throw LookupError("user index out of range");
  }
  if (city && *city >= corpus.num_cities()) {
    throw LookupError("city index out of range");
  }
  std::vector<RankedItem> pool;
  for (Id j = 0; j < corpus.num_items(); ++j) {
    if (city && corpus.item_city[j] != *city) continue;
    if (exclude.contains(j)) continue;
    pool.push_back({j, score(model, user, j)});
  }
  auto better = [](const RankedItem& a, const RankedItem& b) {
    return a.score != b.score ? a.score > b.score : a.item < b.item;
  };
  Recommendation out;
  out.short_list = pool.size() < n;
  const std::size_t take = std::min(n, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + take, pool.end(), better);
  pool.resize(take);
  out.items = std::move(pool);
  return out;
}

}  // namespace jft
