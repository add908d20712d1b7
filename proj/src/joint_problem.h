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

#ifndef JFT_SRC_JOINT_PROBLEM_H_
#define JFT_SRC_JOINT_PROBLEM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "jft/corpus.h"
#include "jft/model.h"

namespace jft::internal {

// The objective F at fixed topic assignments, organized per parameter so that
// each user, item, bias and topic row can be updated by its own line search.
// Holds references to the parameters it updates.
class JointProblem {
 public:
  JointProblem(const Corpus& corpus, std::span<const Observation> obs,
               const Hyperparams& hyper, FactorParams& params,
               TopicState& topics);

  // F computed from topic counts; equal to jft_objective up to rounding.
  double objective() const;

  // One pass: alpha, every user (bias then factors), every item, every topic
  // row. Steps start at step_scale / curvature bound and halve until F does
  // not increase. Returns the number of accepted steps.
  std::size_t sweep(double step_scale);

  JftGradient gradient() const;

 private:
  bool text_enabled() const;
  double doc_text_term(std::size_t doc_slot, std::span<const double> gu,
                       std::span<const double> gi) const;
  void doc_logit_gradient(std::size_t doc_slot, std::span<const double> gu,
                          std::span<const double> gi,
                          std::vector<double>& out) const;

  double user_local(Id u, double bias, std::span<const double> gamma) const;
  double item_local(Id i, double bias, std::span<const double> gamma) const;
  double alpha_local(double alpha) const;
  double topic_local(std::size_t k, std::span<const double> scores) const;

  void user_gradient(Id u, double& g_bias, std::vector<double>& g_gamma) const;
  void item_gradient(Id i, double& g_bias, std::vector<double>& g_gamma) const;
  void topic_gradient(std::size_t k, std::vector<double>& g) const;

  double residual(const Observation& o) const;

  const Corpus& corpus_;
  std::span<const Observation> obs_;
  const Hyperparams& hyper_;
  FactorParams& params_;
  TopicState& topics_;
  std::size_t k_;

  std::vector<std::vector<std::size_t>> by_user_;
  std::vector<std::vector<std::size_t>> by_item_;
  // Per observation: slot into doc_counts_ or -1.
  std::vector<std::ptrdiff_t> doc_slot_;
  std::vector<double> doc_counts_;  // slots x K topic counts
  std::vector<double> doc_length_;
  Matrix topic_word_;               // K x V token counts
  std::vector<double> topic_total_;
};

}  // namespace jft::internal

#endif  // JFT_SRC_JOINT_PROBLEM_H_
