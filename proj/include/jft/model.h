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

#ifndef JFT_MODEL_H_
#define JFT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "jft/corpus.h"
#include "jft/factor.h"
#include "jft/topic.h"

namespace jft {

enum class Mode { kRating, kBinary };

// How document topic distributions are derived from the factors.
//   kJft: theta_d = softmax(gamma_u * gamma_i), elementwise product.
//   kHft: theta_d = normalize(softmax(kappa gamma_u) * softmax(kappa gamma_i)).
//   kLfm: no topic component; the factor model alone.
enum class Strategy { kJft, kHft, kLfm };

std::string to_string(Mode mode);
std::string to_string(Strategy strategy);
Mode parse_mode(const std::string& s);
Strategy parse_strategy(const std::string& s);

struct Hyperparams {
  std::size_t k = 10;
  double lambda_l = 0.01;
  double lambda_p = 0.001;
  double kappa = 1.0;
  Mode mode = Mode::kRating;
  Strategy strategy = Strategy::kJft;
  std::size_t max_iters = 200;
  std::uint64_t seed = 1;
  // Each parameter's line search starts at step_scale * step_decay^(t-1)
  // divided by an upper bound on its local curvature, then halves.
  double step_scale = 1.0;
  double step_decay = 1.0;
  std::size_t max_halvings = 20;
  std::size_t s1_sweeps = 10;  // gradient sweeps over all parameters per S1
  double tol = 1e-4;          // relative l2 change of the factor parameters
  std::size_t patience = 30;  // iterations of worsening validation RMSE
  // An iteration whose F exceeds the previous one is rolled back to the
  // previous state and retried with fresh topic samples. Keeps the trace
  // objective non-increasing.
  bool reject_uphill = true;
  unsigned jobs = 1;          // threads for topic resampling

  // Throws ValidationError when out of range.
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

struct TraceRow {
  std::size_t iter = 0;
  double sq_error = 0.0;
  double log_likelihood = 0.0;
  double objective = 0.0;
  double validation_rmse = 0.0;  // NaN without validation data
};

struct JftModel {
  FactorParams params;
  TopicState topics;
  Hyperparams hyper;
  std::vector<TraceRow> trace;
};

// A rating used for training. doc is the index of the interaction whose
// review belongs to this record, or -1 for records without text (sampled
// negatives).
struct Observation {
  Id user = 0;
  Id item = 0;
  double rating = 0.0;
  std::int64_t doc = -1;
};

std::vector<Observation> observations_of(const Corpus& corpus,
                                         std::span<const std::size_t> indices);

std::vector<double> document_theta(const JftModel& model, Id user, Id item);

struct ObjectiveTerms {
  double sq_error = 0.0;
  double log_likelihood = 0.0;
  double regularizer = 0.0;
  double total = 0.0;  // sq_error - lambda_l * log_likelihood + lambda_p * reg
};

// F(params, phi, z) over `train`. Requires normalized phi and assignments for
// every document in `train`. The log-likelihood term is skipped for kLfm.
// Throws EvaluationError naming the first non-finite term.
ObjectiveTerms jft_objective(const JftModel& model, const Corpus& corpus,
                             std::span<const Observation> train);

struct JftGradient {
  FactorParams params;
  Matrix scores;  // d F / d topic-word scores
};

// Analytic gradient of jft_objective at fixed z, including the path through
// the softmax of the topic-word scores.
JftGradient jft_gradient(const JftModel& model, const Corpus& corpus,
                         std::span<const Observation> train);

// score(u, i) = predict_rating; in binary mode an unbounded relevance score.
double score(const JftModel& model, Id user, Id item);

double rmse_of(const FactorParams& params, std::span<const Observation> data);

// Model file. Assignments are not stored; they can be resampled.
void save_model(const JftModel& model, const Corpus& corpus, std::ostream& out);
void save_model(const JftModel& model, const Corpus& corpus,
                const std::string& path);
// Throws ValidationError if the model does not match the corpus.
JftModel load_model(std::istream& in, const Corpus& corpus);
JftModel load_model(const std::string& path, const Corpus& corpus);

// iter,sq_error,log_likelihood,objective
void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);
// iter,validation_rmse
void write_validation_csv(const std::vector<TraceRow>& trace,
                          std::ostream& out);

// Stable 64-bit fingerprint of a corpus's id maps.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

}  // namespace jft

#endif  // JFT_MODEL_H_
