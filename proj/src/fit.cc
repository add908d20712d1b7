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

#include "jft/fit.h"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "joint_problem.h"
#include "jft/errors.h"
#include "jft/random.h"

namespace jft {

TrainingData make_training_data(const Corpus& corpus,
                                std::span<const std::size_t> indices,
                                double validation_fraction,
                                std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must lie in [0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_user(corpus.num_users());
  for (auto n : indices) by_user.at(corpus.interactions.at(n).user).push_back(n);
  std::vector<char> is_validation(corpus.size(), 0);
  for (Id u = 0; u < by_user.size(); ++u) {
    auto records = by_user[u];
    const auto take = static_cast<std::size_t>(
        std::floor(validation_fraction * static_cast<double>(records.size())));
    if (take == 0) continue;
    Rng rng(mix_seed(seed, u));
    rng.shuffle(records);
    for (std::size_t r = 0; r < take; ++r) is_validation[records[r]] = 1;
  }
  TrainingData data;
  for (auto n : indices) {
    (is_validation[n] ? data.validation : data.train).push_back(n);
  }
  return data;
}

JftModel initial_model(const Corpus& corpus, std::span<const Observation> train,
                       const Hyperparams& hyper) {
  hyper.validate();
  JftModel model;
  model.hyper = hyper;
  std::vector<Rating> ratings;
  ratings.reserve(train.size());
  for (const auto& o : train) ratings.push_back({o.user, o.item, o.rating});
  model.params = init_factors(corpus.num_users(), corpus.num_items(), hyper.k,
                              ratings, hyper.seed);
  model.topics = make_topic_state(hyper.k, corpus.vocab_size());
  if (hyper.strategy != Strategy::kLfm) {
    std::vector<std::size_t> docs;
    for (const auto& o : train) {
      if (o.doc >= 0) docs.push_back(static_cast<std::size_t>(o.doc));
    }
    init_assignments(model.topics, corpus, docs, mix_seed(hyper.seed, 2));
  }
  return model;
}

namespace internal {

namespace {

double squared_distance(const FactorParams& a, const FactorParams& b) {
  double s = (a.alpha - b.alpha) * (a.alpha - b.alpha);
  for (std::size_t n = 0; n < a.beta_user.size(); ++n) {
    s += (a.beta_user[n] - b.beta_user[n]) * (a.beta_user[n] - b.beta_user[n]);
  }
  for (std::size_t n = 0; n < a.beta_item.size(); ++n) {
    s += (a.beta_item[n] - b.beta_item[n]) * (a.beta_item[n] - b.beta_item[n]);
  }
  auto add = [&](std::span<const double> x, std::span<const double> y) {
    for (std::size_t n = 0; n < x.size(); ++n) s += (x[n] - y[n]) * (x[n] - y[n]);
  };
  add(a.gamma_user.data(), b.gamma_user.data());
  add(a.gamma_item.data(), b.gamma_item.data());
  return s;
}

double squared_size(const FactorParams& p) {
  return p.alpha * p.alpha + regularizer(p);
}

}  // namespace

void run_fit(const Corpus& corpus, JftModel& model, ObservationSource next_train,
             std::span<const Observation> validation, bool fixed_train) {
  const Hyperparams& hyper = model.hyper;
  hyper.validate();
  const bool topics_on = hyper.strategy != Strategy::kLfm;

  double best_rmse = validation.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : rmse_of(model.params, validation);
  double previous_rmse = best_rmse;
  FactorParams best_params = model.params;
  TopicState best_topics = model.topics;
  std::size_t worse = 0;
  std::size_t rejected_run = 0;
  const bool rollback = hyper.reject_uphill && fixed_train;
  // State after the last accepted S2, before its resample.
  FactorParams kept_params;
  TopicState kept_topics;
  std::optional<TraceRow> kept_row;
  double scale = hyper.step_scale;
  std::vector<std::size_t> docs;
  std::vector<std::vector<double>> theta;

  for (std::size_t iter = 1; iter <= hyper.max_iters; ++iter) {
    const std::span<const Observation> train = next_train(iter);
    if (train.empty()) throw ValidationError("training set is empty");
    if (topics_on) {
      // Sampled negatives carry no text, so only assignments of documents
      // seen for the first time need initializing.
      for (const auto& o : train) {
        if (o.doc < 0) continue;
        const auto d = static_cast<std::size_t>(o.doc);
        if (d >= model.topics.z.size() ||
            model.topics.z[d].size() != corpus.interactions[d].tokens.size()) {
          const std::size_t one[] = {d};
          init_assignments(model.topics, corpus, one, mix_seed(hyper.seed, 2));
        }
      }
    }
    const FactorParams before = model.params;

    // S1
    {
      JointProblem problem(corpus, train, hyper, model.params, model.topics);
      for (std::size_t s = 0; s < hyper.s1_sweeps; ++s) problem.sweep(scale);
    }
    // S2
    normalize_phi(model.topics);

    TraceRow row;
    row.iter = iter;
    ObjectiveTerms terms;
    try {
      terms = jft_objective(model, corpus, train);
    } catch (const EvaluationError& e) {
      throw TrainingError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    if (!std::isfinite(terms.total)) {
      throw TrainingError("objective became non-finite at iteration " +
                          std::to_string(iter));
    }
    row.sq_error = terms.sq_error;
    row.log_likelihood = terms.log_likelihood;
    row.objective = terms.total;
    row.validation_rmse = rmse_of(model.params, validation);

    const bool rejected =
        rollback && kept_row && row.objective > kept_row->objective;
    if (rejected) {
      model.params = kept_params;
      model.topics = kept_topics;
      row = *kept_row;
      row.iter = iter;
      ++rejected_run;
    } else if (rollback) {
      kept_params = model.params;
      kept_topics = model.topics;
      kept_row = row;
      rejected_run = 0;
    }
    model.trace.push_back(row);

    // S3
    if (topics_on) {
      docs.clear();
      theta.clear();
      for (const auto& o : train) {
        if (o.doc < 0) continue;
        docs.push_back(static_cast<std::size_t>(o.doc));
        theta.push_back(document_theta(model, o.user, o.item));
      }
      sample_topics(corpus, docs, theta, model.topics,
                    mix_seed(hyper.seed, 1000 + iter), hyper.jobs);
    }

    scale *= hyper.step_decay;

    if (rejected) {
      // The retry uses fresh samples; a long run of failures means no
      // resample improves on the current state.
      if (rejected_run >= hyper.patience) break;
      continue;
    }
    bool stop = false;
    if (!validation.empty()) {
      const double v = row.validation_rmse;
      worse = v > previous_rmse ? worse + 1 : 0;
      previous_rmse = v;
      if (v < best_rmse) {
        best_rmse = v;
        best_params = model.params;
        best_topics = model.topics;
      }
      if (worse >= hyper.patience) stop = true;
    }
    const double size = std::sqrt(squared_size(before));
    const double change = std::sqrt(squared_distance(model.params, before));
    if (change <= hyper.tol * std::max(size, 1e-12)) stop = true;
    if (stop) break;
  }
  if (!validation.empty() && !model.trace.empty()) {
    model.params = std::move(best_params);
    model.topics = std::move(best_topics);
  }
}

}  // namespace internal

JftModel fit(const Corpus& corpus, std::span<const Observation> train,
             std::span<const Observation> validation,
             const Hyperparams& hyper) {
  if (train.empty()) throw ValidationError("training set is empty");
  JftModel model = initial_model(corpus, train, hyper);
  internal::run_fit(
      corpus, model, [train](std::size_t) { return train; }, validation,
      true);
  return model;
}

JftModel fit(const Corpus& corpus, const TrainingData& data,
             const Hyperparams& hyper) {
  const auto train = observations_of(corpus, data.train);
  const auto validation = observations_of(corpus, data.validation);
  return fit(corpus, train, validation, hyper);
}

}  // namespace jft
