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

#ifndef JFT_FACTOR_H_
#define JFT_FACTOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jft/corpus.h"
#include "jft/linalg.h"

namespace jft {

// Bias-aware latent factor parameters:
//   rate(u, i) = alpha + beta_user[u] + beta_item[i] + gamma_user[u] . gamma_item[i]
struct FactorParams {
  double alpha = 0.0;
  std::vector<double> beta_user;
  std::vector<double> beta_item;
  Matrix gamma_user;  // U x K
  Matrix gamma_item;  // I x K

  static FactorParams zeros(std::size_t users, std::size_t items,
                            std::size_t k);

  std::size_t num_users() const { return beta_user.size(); }
  std::size_t num_items() const { return beta_item.size(); }
  std::size_t k() const { return gamma_user.cols(); }

  bool operator==(const FactorParams&) const = default;
};

// A single observed (or sampled) rating.
struct Rating {
  Id user = 0;
  Id item = 0;
  double value = 0.0;
};

std::vector<Rating> ratings_of(const Corpus& corpus,
                               std::span<const std::size_t> indices);

// Unclipped prediction. Throws LookupError on out-of-range indices.
double predict_rating(const FactorParams& params, Id user, Id item);

// Omega = sum over users of (beta_u^2 + |gamma_u|^2) plus the same over
// items. alpha is not regularized.
double regularizer(const FactorParams& params);

// Sum of squared residuals plus lambda_p * Omega.
double lfm_objective(const FactorParams& params, std::span<const Rating> train,
                     double lambda_p);

// Analytic gradient of lfm_objective, shaped like the parameters.
FactorParams lfm_gradient(const FactorParams& params,
                          std::span<const Rating> train, double lambda_p);

// alpha = mean rating, biases zero, factors ~ N(0, (0.1 / sqrt(K))^2).
FactorParams init_factors(std::size_t users, std::size_t items, std::size_t k,
                          std::span<const Rating> train, std::uint64_t seed);

struct SgdOptions {
  double learning_rate = 0.01;
  double decay = 0.95;  // multiplicative, per epoch
  std::size_t max_epochs = 200;
  std::size_t patience = 5;  // epochs of worsening validation before stopping
  std::uint64_t seed = 1;
};

struct LfmFit {
  FactorParams params;  // parameters at the best validation epoch
  std::vector<double> train_objective;  // after each epoch
  std::vector<double> validation_error;  // squared error, after each epoch
  std::size_t best_epoch = 0;  // 1-based, 0 means the initialization
};

// SGD on lfm_objective. The regularizer is applied per record with weight
// 1 / (records of that user or item), as an exact shrinkage step, so one
// epoch sweeps the full objective once. Without validation records the last
// epoch is returned. Throws TrainingError when the objective turns non-finite.
LfmFit fit_lfm(std::size_t users, std::size_t items, std::size_t k,
               std::span<const Rating> train,
               std::span<const Rating> validation, double lambda_p,
               const SgdOptions& options);

double squared_error(const FactorParams& params,
                     std::span<const Rating> ratings);

}  // namespace jft

#endif  // JFT_FACTOR_H_
