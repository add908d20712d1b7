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

#include "jft/factor.h"

#include <cmath>
#include <numeric>
#include <string>

#include "jft/errors.h"
#include "jft/random.h"

namespace jft {

FactorParams FactorParams::zeros(std::size_t users, std::size_t items,
                                 std::size_t k) {
  FactorParams p;
  p.beta_user.assign(users, 0.0);
  p.beta_item.assign(items, 0.0);
  p.gamma_user = Matrix(users, k);
  p.gamma_item = Matrix(items, k);
  return p;
}

std::vector<Rating> ratings_of(const Corpus& corpus,
                               std::span<const std::size_t> indices) {
  std::vector<Rating> out;
  out.reserve(indices.size());
  for (auto n : indices) {
    const auto& x = corpus.interactions.at(n);
    out.push_back({x.user, x.item, x.rating});
  }
  return out;
}

double predict_rating(const FactorParams& p, Id user, Id item) {
  if (user >= p.num_users()) {
    throw LookupError("user index " + std::to_string(user) + " out of range");
  }
  if (item >= p.num_items()) {
    throw LookupError("item index " + std::to_string(item) + " out of range");
  }
  return p.alpha + p.beta_user[user] + p.beta_item[item] +
         dot(p.gamma_user.row(user), p.gamma_item.row(item));
}

double regularizer(const FactorParams& p) {
  double s = 0.0;
  for (double b : p.beta_user) s += b * b;
  for (double b : p.beta_item) s += b * b;
  s += squared_norm(p.gamma_user.data());
  s += squared_norm(p.gamma_item.data());
  return s;
}

double squared_error(const FactorParams& p, std::span<const Rating> ratings) {
  double s = 0.0;
  for (const auto& r : ratings) {
    const double e = predict_rating(p, r.user, r.item) - r.value;
    s += e * e;
  }
  return s;
}

double lfm_objective(const FactorParams& p, std::span<const Rating> train,
                     double lambda_p) {
  return squared_error(p, train) + lambda_p * regularizer(p);
}

FactorParams lfm_gradient(const FactorParams& p, std::span<const Rating> train,
                          double lambda_p) {
  const std::size_t k = p.k();
  FactorParams g = FactorParams::zeros(p.num_users(), p.num_items(), k);
  for (const auto& r : train) {
    const double e = 2.0 * (predict_rating(p, r.user, r.item) - r.value);
    g.alpha += e;
    g.beta_user[r.user] += e;
    g.beta_item[r.item] += e;
    auto gu = g.gamma_user.row(r.user);
    auto gi = g.gamma_item.row(r.item);
    auto pu = p.gamma_user.row(r.user);
    auto pi = p.gamma_item.row(r.item);
    for (std::size_t f = 0; f < k; ++f) {
      gu[f] += e * pi[f];
      gi[f] += e * pu[f];
    }
  }
  const double two_l = 2.0 * lambda_p;
  for (std::size_t u = 0; u < p.num_users(); ++u) {
    g.beta_user[u] += two_l * p.beta_user[u];
  }
  for (std::size_t i = 0; i < p.num_items(); ++i) {
    g.beta_item[i] += two_l * p.beta_item[i];
  }
  auto gu = g.gamma_user.data();
  auto pu = p.gamma_user.data();
  for (std::size_t n = 0; n < gu.size(); ++n) gu[n] += two_l * pu[n];
  auto gi = g.gamma_item.data();
  auto pi = p.gamma_item.data();
  for (std::size_t n = 0; n < gi.size(); ++n) gi[n] += two_l * pi[n];
  return g;
}

FactorParams init_factors(std::size_t users, std::size_t items, std::size_t k,
                          std::span<const Rating> train, std::uint64_t seed) {
  FactorParams p = FactorParams::zeros(users, items, k);
  if (!train.empty()) {
    double s = 0.0;
    for (const auto& r : train) s += r.value;
    p.alpha = s / static_cast<double>(train.size());
  }
  Rng rng(seed);
  const double sd = 0.1 / std::sqrt(static_cast<double>(k));
  for (double& v : p.gamma_user.data()) v = rng.normal(0.0, sd);
  for (double& v : p.gamma_item.data()) v = rng.normal(0.0, sd);
  return p;
}

LfmFit fit_lfm(std::size_t users, std::size_t items, std::size_t k,
               std::span<const Rating> train,
               std::span<const Rating> validation, double lambda_p,
               const SgdOptions& options) {
  if (train.empty()) throw ValidationError("training set is empty");
  if (k == 0) throw ValidationError("K must be at least 1");
  LfmFit fit;
  FactorParams p = init_factors(users, items, k, train, options.seed);

  std::vector<double> user_count(users, 0.0), item_count(items, 0.0);
  for (const auto& r : train) {
    user_count.at(r.user) += 1.0;
    item_count.at(r.item) += 1.0;
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(options.seed, 1));

  double best = validation.empty() ? 0.0 : squared_error(p, validation);
  double previous = best;
  fit.params = p;
  std::size_t worse = 0;
  double eta = options.learning_rate;
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (auto n : order) {
      const Rating& r = train[n];
      auto gu = p.gamma_user.row(r.user);
      auto gi = p.gamma_item.row(r.item);
      const double e = 2.0 * (p.alpha + p.beta_user[r.user] +
                              p.beta_item[r.item] + dot(gu, gi) - r.value);
      p.alpha -= eta * e;
      p.beta_user[r.user] -= eta * e;
      p.beta_item[r.item] -= eta * e;
      for (std::size_t f = 0; f < k; ++f) {
        const double u = gu[f];
        gu[f] -= eta * e * gi[f];
        gi[f] -= eta * e * u;
      }
      // Proximal step for this record's share of lambda_p * Omega.
      const double su = 1.0 / (1.0 + 2.0 * eta * lambda_p / user_count[r.user]);
      const double si = 1.0 / (1.0 + 2.0 * eta * lambda_p / item_count[r.item]);
      p.beta_user[r.user] *= su;
      p.beta_item[r.item] *= si;
      for (std::size_t f = 0; f < k; ++f) {
        gu[f] *= su;
        gi[f] *= si;
      }
    }
    const double objective = lfm_objective(p, train, lambda_p);
    if (!std::isfinite(objective)) {
      throw TrainingError("LFM objective became non-finite at epoch " +
                          std::to_string(epoch));
    }
    fit.train_objective.push_back(objective);
    eta *= options.decay;
    if (validation.empty()) {
      fit.params = p;
      fit.best_epoch = epoch;
      continue;
    }
    const double v = squared_error(p, validation);
    worse = v > previous ? worse + 1 : 0;
    previous = v;
    fit.validation_error.push_back(v);
    if (v < best) {
      best = v;
      fit.params = p;
      fit.best_epoch = epoch;
    }
    if (worse >= options.patience) break;
  }
  return fit;
}

}  // namespace jft
