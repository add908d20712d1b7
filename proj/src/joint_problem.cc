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

#include "joint_problem.h"

#include <algorithm>
#include <cmath>

#include "jft/errors.h"
#include "jft/linalg.h"

namespace jft::internal {

namespace {

const double kLogFloor = std::log(kLikelihoodFloor);

// Accepts the first trial step (halving from `step`) that does not increase
// `f`. Returns whether a step was taken.
template <typename Eval, typename Apply>
bool line_search(double f0, double step, std::size_t max_halvings, Eval eval,
                 Apply apply) {
  for (std::size_t h = 0; h <= max_halvings; ++h, step *= 0.5) {
    const double f = eval(step);
    if (std::isfinite(f) && f <= f0) {
      apply(step);
      return true;
    }
  }
  return false;
}

}  // namespace

JointProblem::JointProblem(const Corpus& corpus,
                           std::span<const Observation> obs,
                           const Hyperparams& hyper, FactorParams& params,
                           TopicState& topics)
    : corpus_(corpus),
      obs_(obs),
      hyper_(hyper),
      params_(params),
      topics_(topics),
      k_(params.k()),
      by_user_(params.num_users()),
      by_item_(params.num_items()),
      doc_slot_(obs.size(), -1) {
  for (std::size_t n = 0; n < obs.size(); ++n) {
    const auto& o = obs[n];
    if (o.user >= params.num_users() || o.item >= params.num_items()) {
      throw ValidationError("observation index out of range");
    }
    by_user_[o.user].push_back(n);
    by_item_[o.item].push_back(n);
  }
  if (!text_enabled()) return;
  topic_word_ = Matrix(k_, topics.vocab_size());
  topic_total_.assign(k_, 0.0);
  for (std::size_t n = 0; n < obs.size(); ++n) {
    if (obs[n].doc < 0) continue;
    const auto d = static_cast<std::size_t>(obs[n].doc);
    const auto& tokens = corpus.interactions.at(d).tokens;
    if (d >= topics.z.size() || topics.z[d].size() != tokens.size()) {
      throw ValidationError("document " + std::to_string(d) +
                            " lacks topic assignments");
    }
    const std::size_t slot = doc_length_.size();
    doc_slot_[n] = static_cast<std::ptrdiff_t>(slot);
    doc_counts_.resize((slot + 1) * k_, 0.0);
    doc_length_.push_back(static_cast<double>(tokens.size()));
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const auto z = topics.z[d][j];
      doc_counts_[slot * k_ + z] += 1.0;
      topic_word_(z, tokens[j]) += 1.0;
      topic_total_[z] += 1.0;
    }
  }
}

bool JointProblem::text_enabled() const {
  return hyper_.strategy != Strategy::kLfm && hyper_.lambda_l != 0.0;
}

double JointProblem::residual(const Observation& o) const {
  return params_.alpha + params_.beta_user[o.user] + params_.beta_item[o.item] +
         dot(params_.gamma_user.row(o.user), params_.gamma_item.row(o.item)) -
         o.rating;
}

namespace {

void logits(Strategy strategy, double kappa, std::span<const double> gu,
            std::span<const double> gi, std::vector<double>& out) {
  out.resize(gu.size());
  for (std::size_t k = 0; k < gu.size(); ++k) {
    out[k] = strategy == Strategy::kHft ? kappa * (gu[k] + gi[k])
                                        : gu[k] * gi[k];
  }
}

}  // namespace

// -sum_k n_dk log max(theta_dk, floor).
double JointProblem::doc_text_term(std::size_t slot, std::span<const double> gu,
                                   std::span<const double> gi) const {
  thread_local std::vector<double> x;
  logits(hyper_.strategy, hyper_.kappa, gu, gi, x);
  const double lse = log_sum_exp(x);
  double s = 0.0;
  for (std::size_t k = 0; k < k_; ++k) {
    const double n = doc_counts_[slot * k_ + k];
    if (n != 0.0) s -= n * std::max(x[k] - lse, kLogFloor);
  }
  return s;
}

// d(-sum_k n_k log theta_k) / d logits = -(n_k - L theta_k).
void JointProblem::doc_logit_gradient(std::size_t slot,
                                      std::span<const double> gu,
                                      std::span<const double> gi,
                                      std::vector<double>& out) const {
  logits(hyper_.strategy, hyper_.kappa, gu, gi, out);
  auto theta = softmax(out);
  for (std::size_t k = 0; k < k_; ++k) {
    out[k] = -(doc_counts_[slot * k_ + k] - doc_length_[slot] * theta[k]);
  }
}

double JointProblem::alpha_local(double alpha) const {
  double s = 0.0;
  for (const auto& o : obs_) {
    const double e = residual(o) + (alpha - params_.alpha);
    s += e * e;
  }
  return s;
}

double JointProblem::user_local(Id u, double bias,
                                std::span<const double> gamma) const {
  double s = 0.0;
  const bool text = text_enabled();
  for (auto n : by_user_[u]) {
    const auto& o = obs_[n];
    auto gi = params_.gamma_item.row(o.item);
    const double e = params_.alpha + bias + params_.beta_item[o.item] +
                     dot(gamma, gi) - o.rating;
    s += e * e;
    if (text && doc_slot_[n] >= 0) {
      s += hyper_.lambda_l *
           doc_text_term(static_cast<std::size_t>(doc_slot_[n]), gamma, gi);
    }
  }
  return s + hyper_.lambda_p * (bias * bias + squared_norm(gamma));
}

double JointProblem::item_local(Id i, double bias,
                                std::span<const double> gamma) const {
  double s = 0.0;
  const bool text = text_enabled();
  for (auto n : by_item_[i]) {
    const auto& o = obs_[n];
    auto gu = params_.gamma_user.row(o.user);
    const double e = params_.alpha + params_.beta_user[o.user] + bias +
                     dot(gu, gamma) - o.rating;
    s += e * e;
    if (text && doc_slot_[n] >= 0) {
      s += hyper_.lambda_l *
           doc_text_term(static_cast<std::size_t>(doc_slot_[n]), gu, gamma);
    }
  }
  return s + hyper_.lambda_p * (bias * bias + squared_norm(gamma));
}

double JointProblem::topic_local(std::size_t k,
                                 std::span<const double> scores) const {
  const double lse = log_sum_exp(scores);
  double s = 0.0;
  for (std::size_t w = 0; w < scores.size(); ++w) {
    const double m = topic_word_(k, w);
    if (m != 0.0) s -= m * std::max(scores[w] - lse, kLogFloor);
  }
  return hyper_.lambda_l * s;
}

void JointProblem::user_gradient(Id u, double& g_bias,
                                 std::vector<double>& g) const {
  g.assign(k_, 0.0);
  g_bias = 2.0 * hyper_.lambda_p * params_.beta_user[u];
  auto gu = params_.gamma_user.row(u);
  for (std::size_t f = 0; f < k_; ++f) g[f] = 2.0 * hyper_.lambda_p * gu[f];
  std::vector<double> dl;
  const bool text = text_enabled();
  for (auto n : by_user_[u]) {
    const auto& o = obs_[n];
    auto gi = params_.gamma_item.row(o.item);
    const double e = 2.0 * residual(o);
    g_bias += e;
    for (std::size_t f = 0; f < k_; ++f) g[f] += e * gi[f];
    if (text && doc_slot_[n] >= 0) {
      doc_logit_gradient(static_cast<std::size_t>(doc_slot_[n]), gu, gi, dl);
      for (std::size_t f = 0; f < k_; ++f) {
        const double dlogit = hyper_.strategy == Strategy::kHft
                                  ? hyper_.kappa
                                  : gi[f];
        g[f] += hyper_.lambda_l * dl[f] * dlogit;
      }
    }
  }
}

void JointProblem::item_gradient(Id i, double& g_bias,
                                 std::vector<double>& g) const {
  g.assign(k_, 0.0);
  g_bias = 2.0 * hyper_.lambda_p * params_.beta_item[i];
  auto gi = params_.gamma_item.row(i);
  for (std::size_t f = 0; f < k_; ++f) g[f] = 2.0 * hyper_.lambda_p * gi[f];
  std::vector<double> dl;
  const bool text = text_enabled();
  for (auto n : by_item_[i]) {
    const auto& o = obs_[n];
    auto gu = params_.gamma_user.row(o.user);
    const double e = 2.0 * residual(o);
    g_bias += e;
    for (std::size_t f = 0; f < k_; ++f) g[f] += e * gu[f];
    if (text && doc_slot_[n] >= 0) {
      doc_logit_gradient(static_cast<std::size_t>(doc_slot_[n]), gu, gi, dl);
      for (std::size_t f = 0; f < k_; ++f) {
        const double dlogit = hyper_.strategy == Strategy::kHft
                                  ? hyper_.kappa
                                  : gu[f];
        g[f] += hyper_.lambda_l * dl[f] * dlogit;
      }
    }
  }
}

void JointProblem::topic_gradient(std::size_t k, std::vector<double>& g) const {
  auto phi = softmax(topics_.scores.row(k));
  g.resize(phi.size());
  for (std::size_t w = 0; w < phi.size(); ++w) {
    g[w] = -hyper_.lambda_l * (topic_word_(k, w) - topic_total_[k] * phi[w]);
  }
}

double JointProblem::objective() const {
  double sq = 0.0;
  for (const auto& o : obs_) {
    const double e = residual(o);
    sq += e * e;
  }
  double text = 0.0;
  if (text_enabled()) {
    for (std::size_t n = 0; n < obs_.size(); ++n) {
      if (doc_slot_[n] < 0) continue;
      text += doc_text_term(static_cast<std::size_t>(doc_slot_[n]),
                            params_.gamma_user.row(obs_[n].user),
                            params_.gamma_item.row(obs_[n].item));
    }
    for (std::size_t k = 0; k < k_; ++k) {
      text += topic_local(k, topics_.scores.row(k)) / hyper_.lambda_l;
    }
  }
  return sq + hyper_.lambda_l * text + hyper_.lambda_p * regularizer(params_);
}

JftGradient JointProblem::gradient() const {
  JftGradient out;
  out.params = FactorParams::zeros(params_.num_users(), params_.num_items(), k_);
  for (const auto& o : obs_) out.params.alpha += 2.0 * residual(o);
  std::vector<double> g;
  for (Id u = 0; u < params_.num_users(); ++u) {
    user_gradient(u, out.params.beta_user[u], g);
    std::copy(g.begin(), g.end(), out.params.gamma_user.row(u).begin());
  }
  for (Id i = 0; i < params_.num_items(); ++i) {
    item_gradient(i, out.params.beta_item[i], g);
    std::copy(g.begin(), g.end(), out.params.gamma_item.row(i).begin());
  }
  out.scores = Matrix(topics_.k(), topics_.vocab_size());
  if (text_enabled()) {
    for (std::size_t k = 0; k < k_; ++k) {
      topic_gradient(k, g);
      std::copy(g.begin(), g.end(), out.scores.row(k).begin());
    }
  }
  return out;
}

std::size_t JointProblem::sweep(double step_scale) {
  const std::size_t halvings = hyper_.max_halvings;
  const double lambda_p = hyper_.lambda_p;
  const bool text = text_enabled();
  const double two_lp = 2.0 * lambda_p;
  constexpr double kMinCurvature = 1e-8;
  std::size_t accepted = 0;

  // alpha
  {
    double g = 0.0;
    for (const auto& o : obs_) g += 2.0 * residual(o);
    const double curvature = std::max(2.0 * obs_.size(), kMinCurvature);
    const double a0 = params_.alpha;
    if (g != 0.0) {
      accepted += line_search(
          alpha_local(a0), step_scale / curvature, halvings,
          [&](double s) { return alpha_local(a0 - s * g); },
          [&](double s) { params_.alpha = a0 - s * g; });
    }
  }

  std::vector<double> g, trial(k_);
  double g_bias = 0.0;
  auto update_entity = [&](auto local, auto gradient_fn, double& bias,
                           std::span<double> gamma, double n_obs,
                           double factor_curvature) {
    // bias
    gradient_fn(g_bias, g);
    if (g_bias != 0.0) {
      const double b0 = bias;
      const double gb = g_bias;
      accepted += line_search(
          local(b0, gamma), step_scale / std::max(2.0 * n_obs + two_lp,
                                                  kMinCurvature),
          halvings, [&](double s) { return local(b0 - s * gb, gamma); },
          [&](double s) { bias = b0 - s * gb; });
    }
    // factors, with the gradient refreshed after the bias moved
    gradient_fn(g_bias, g);
    const std::vector<double> g0(gamma.begin(), gamma.end());
    const double f0 = local(bias, gamma);
    accepted += line_search(
        f0, step_scale / std::max(factor_curvature, kMinCurvature), halvings,
        [&](double s) {
          for (std::size_t f = 0; f < k_; ++f) trial[f] = g0[f] - s * g[f];
          return local(bias, trial);
        },
        [&](double s) {
          for (std::size_t f = 0; f < k_; ++f) gamma[f] = g0[f] - s * g[f];
        });
  };

  // The document term's Hessian in one factor vector is D (L (diag(theta) -
  // theta theta^T)) D with D = diag(other factor) (jft) or kappa I (hft), so
  // L * max(theta) * max(D^2) bounds it at the current point.
  std::vector<double> logits(k_);
  auto text_curvature = [&](std::size_t n, std::span<const double> other) {
    if (!text || doc_slot_[n] < 0) return 0.0;
    auto gu = params_.gamma_user.row(obs_[n].user);
    auto gi = params_.gamma_item.row(obs_[n].item);
    const bool hft = hyper_.strategy == Strategy::kHft;
    double scale2 = hft ? hyper_.kappa * hyper_.kappa : 0.0;
    for (std::size_t f = 0; f < k_; ++f) {
      logits[f] = hft ? hyper_.kappa * (gu[f] + gi[f]) : gu[f] * gi[f];
      if (!hft) scale2 = std::max(scale2, other[f] * other[f]);
    }
    const auto theta = softmax(logits);
    const double top = *std::max_element(theta.begin(), theta.end());
    return hyper_.lambda_l * doc_length_[doc_slot_[n]] * top * scale2;
  };

  for (Id u = 0; u < params_.num_users(); ++u) {
    if (by_user_[u].empty()) continue;
    double curvature = two_lp;
    for (auto n : by_user_[u]) {
      auto gi = params_.gamma_item.row(obs_[n].item);
      curvature += 2.0 * squared_norm(gi) + text_curvature(n, gi);
    }
    update_entity(
        [&](double b, std::span<const double> gm) { return user_local(u, b, gm); },
        [&](double& gb, std::vector<double>& gv) { user_gradient(u, gb, gv); },
        params_.beta_user[u], params_.gamma_user.row(u),
        static_cast<double>(by_user_[u].size()), curvature);
  }
  for (Id i = 0; i < params_.num_items(); ++i) {
    if (by_item_[i].empty()) continue;
    double curvature = two_lp;
    for (auto n : by_item_[i]) {
      auto gu = params_.gamma_user.row(obs_[n].user);
      curvature += 2.0 * squared_norm(gu) + text_curvature(n, gu);
    }
    update_entity(
        [&](double b, std::span<const double> gm) { return item_local(i, b, gm); },
        [&](double& gb, std::vector<double>& gv) { item_gradient(i, gb, gv); },
        params_.beta_item[i], params_.gamma_item.row(i),
        static_cast<double>(by_item_[i].size()), curvature);
  }

  if (text) {
    std::vector<double> s_trial(topics_.vocab_size());
    for (std::size_t k = 0; k < k_; ++k) {
      if (topic_total_[k] == 0.0) continue;
      topic_gradient(k, g);
      auto row = topics_.scores.row(k);
      const std::vector<double> s0(row.begin(), row.end());
      // diag(phi) - phi phi^T <= diag(phi), so M_k * max(phi) bounds the
      // curvature at the current point; the line search covers the rest.
      const auto phi0 = softmax(s0);
      const double curvature =
          std::max(hyper_.lambda_l * topic_total_[k] *
                       *std::max_element(phi0.begin(), phi0.end()),
                   kMinCurvature);
      const bool moved = line_search(
          topic_local(k, s0), step_scale / curvature, halvings,
          [&](double s) {
            for (std::size_t w = 0; w < s0.size(); ++w) {
              s_trial[w] = s0[w] - s * g[w];
            }
            return topic_local(k, s_trial);
          },
          [&](double s) {
            for (std::size_t w = 0; w < s0.size(); ++w) {
              row[w] = s0[w] - s * g[w];
            }
          });
      if (moved) {
        ++accepted;
        topics_.normalized = false;
      }
    }
  }
  return accepted;
}

}  // namespace jft::internal
