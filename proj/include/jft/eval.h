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

#ifndef JFT_EVAL_H_
#define JFT_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "jft/corpus.h"
#include "jft/factor.h"
#include "jft/model.h"

namespace jft {

// ---------------------------------------------------------------------------
// Metrics. Empty or mismatched inputs throw ValidationError.

double rmse(std::span<const double> predictions, std::span<const double> truths,
            bool clip = false);
double mae(std::span<const double> predictions, std::span<const double> truths,
           bool clip = false);

// |top-n of recommended ∩ relevant| / n. n must be at least 1.
double precision_at_n(std::span<const Id> recommended,
                      const std::unordered_set<Id>& relevant, std::size_t n);

// Binary relevance, gain 1 / log2(position + 1), normalized by the ideal
// list of min(|relevant|, n) hits. 0 when nothing is relevant.
double ndcg_at_n(std::span<const Id> recommended,
                 const std::unordered_set<Id>& relevant, std::size_t n);

// ---------------------------------------------------------------------------
// Training entry point shared by evaluation and the command line.

struct TrainOptions {
  double validation_fraction = 0.1;
  // Squared error on 0/1 labels is a poor stopping signal, so binary
  // training uses every record and runs its full epoch budget by default.
  double binary_validation_fraction = 0.0;
  SgdOptions sgd;  // used by rating-mode lfm; its seed is taken from hyper
  const JftModel* warm_start = nullptr;  // binary mode only
};

// Rating mode with strategy lfm runs stochastic gradient descent on the
// factor model; other rating-mode strategies run the alternating fit; binary
// mode runs fit_binary. A validation share of `records` drives early
// stopping.
JftModel train_model(const Corpus& corpus, std::span<const std::size_t> records,
                     const Hyperparams& hyper,
                     const TrainOptions& options = {});

// ---------------------------------------------------------------------------
// Cross-validation

enum class Protocol { kRating, kTopN, kTopNCrossCity };
std::string to_string(Protocol protocol);
Protocol parse_protocol(const std::string& s);

using Trainer = std::function<JftModel(
    const Corpus&, std::span<const std::size_t> train, const Hyperparams&)>;

struct EvalOptions {
  std::size_t folds = 5;
  Protocol protocol = Protocol::kRating;
  std::size_t top_n = 5;
  std::size_t holdout = 5;           // records held out per user / pair
  std::size_t min_city_records = 5;  // cross-city pair threshold
  bool clip = false;                 // clip rating predictions to [1, 5]
  unsigned jobs = 1;                 // folds trained in parallel
  TrainOptions train;
  Trainer trainer;  // empty: train_model with `train`
};

struct FoldResult {
  int fold = 0;
  std::map<std::string, double> metrics;
  std::size_t evaluated = 0;  // test records, users or pairs scored
};

struct EvalReport {
  Protocol protocol = Protocol::kRating;
  Strategy strategy = Strategy::kJft;
  std::size_t k = 0;
  std::vector<FoldResult> folds;
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;  // sample standard deviation over folds

  bool cross_city() const { return protocol == Protocol::kTopNCrossCity; }
};

// Rating protocol: user-stratified folds, rmse and mae on each test fold.
// Top-N protocols: each fold is an independent hold-out drawn with the fold
// seed; users (or user-city pairs) get a top-n list from the city in question
// and precision / ndcg are averaged over them. Fold f trains with seed
// mix_seed(hyper.seed, f). Throws ValidationError if the cross-city protocol
// finds no qualifying pairs.
EvalReport cross_validate(const Corpus& corpus, const Hyperparams& hyper,
                          const EvalOptions& options);

// One row per (fold, metric) plus mean and std rows:
//   protocol,strategy,K,fold,metric,value
void write_report_csv(const std::vector<EvalReport>& reports, std::ostream& out,
                      bool header = true);
void write_report_json(const EvalReport& report, std::ostream& out);

// cross_validate for every K in k_list and every strategy, K-major.
std::vector<EvalReport> run_sweep(const Corpus& corpus, const Hyperparams& hyper,
                                  const EvalOptions& options,
                                  std::span<const std::size_t> k_list,
                                  std::span<const Strategy> strategies);

}  // namespace jft

#endif  // JFT_EVAL_H_
