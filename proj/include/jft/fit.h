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

#ifndef JFT_FIT_H_
#define JFT_FIT_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jft/corpus.h"
#include "jft/model.h"

namespace jft {

// Interaction indices used for fitting. Validation records drive the
// overfitting stop and the choice of the returned parameters.
struct TrainingData {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Moves floor(fraction * n_u) random records of every user into validation.
TrainingData make_training_data(const Corpus& corpus,
                                std::span<const std::size_t> indices,
                                double validation_fraction, std::uint64_t seed);

// Alternating fit. Each iteration runs
//   S1  gradient sweeps over all factor parameters and topic-word scores at
//       fixed assignments, each parameter with its own backtracking search;
//   S2  softmax normalization of the topic-word scores;
//   S3  resampling of every word's topic from theta_d * phi.
// Stops when the relative l2 change of the factor parameters drops below
// hyper.tol, after hyper.patience consecutive iterations of worsening
// validation RMSE, or after hyper.max_iters. With validation data the
// parameters of the best validation iteration are returned; the trace covers
// every completed iteration. Throws TrainingError on a non-finite objective.
JftModel fit(const Corpus& corpus, std::span<const Observation> train,
             std::span<const Observation> validation, const Hyperparams& hyper);

// Rating-mode convenience overload.
JftModel fit(const Corpus& corpus, const TrainingData& data,
             const Hyperparams& hyper);

// Initial model: factors from init_factors over `train`, zero topic scores,
// uniformly random assignments for the documents in `train`.
JftModel initial_model(const Corpus& corpus, std::span<const Observation> train,
                       const Hyperparams& hyper);

namespace internal {

// Shared driver for rating and binary fitting. next_train(t) supplies the
// observations of iteration t (1-based); the span must stay valid until the
// next call. fixed_train says every call returns the same observations, which
// is required for comparing F across iterations (see reject_uphill).
using ObservationSource =
    std::function<std::span<const Observation>(std::size_t iter)>;

void run_fit(const Corpus& corpus, JftModel& model, ObservationSource next_train,
             std::span<const Observation> validation, bool fixed_train);

}  // namespace internal

}  // namespace jft

#endif  // JFT_FIT_H_
