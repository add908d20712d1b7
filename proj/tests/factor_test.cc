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

#include <cmath>
#include <vector>

#include <doctest.h>

#include "jft/errors.h"
#include "jft/factor.h"
#include "jft/random.h"

namespace jft {
namespace {

FactorParams random_params(std::size_t users, std::size_t items, std::size_t k,
                           Rng& rng) {
  FactorParams p = FactorParams::zeros(users, items, k);
  p.alpha = rng.normal();
  for (auto& b : p.beta_user) b = rng.normal();
  for (auto& b : p.beta_item) b = rng.normal();
  for (auto& g : p.gamma_user.data()) g = rng.normal();
  for (auto& g : p.gamma_item.data()) g = rng.normal();
  return p;
}

std::vector<Rating> random_ratings(std::size_t users, std::size_t items,
                                   std::size_t n, Rng& rng) {
  std::vector<Rating> out;
  for (std::size_t t = 0; t < n; ++t) {
    out.push_back({static_cast<Id>(rng.index(users)),
                   static_cast<Id>(rng.index(items)), 1.0 + 4.0 * rng.uniform()});
  }
  return out;
}

// Independent second implementation of the rating formula.
double oracle_rate(const FactorParams& p, Id u, Id i) {
  double s = 0.0;
  for (std::size_t f = 0; f < p.k(); ++f) s += p.gamma_user(u, f) * p.gamma_item(i, f);
  return s + p.beta_item[i] + p.beta_user[u] + p.alpha;
}

TEST_CASE("predict_rating") {
  FactorParams p = FactorParams::zeros(1, 1, 2);
  p.alpha = 3.5;
  CHECK(predict_rating(p, 0, 0) == 3.5);
  p.alpha = 0;
  p.beta_user[0] = 1;
  p.beta_item[0] = -0.5;
  p.gamma_user(0, 0) = 0.5;
  p.gamma_item(0, 0) = 0.5;
  p.gamma_item(0, 1) = 1;
  CHECK(predict_rating(p, 0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(predict_rating(p, 1, 0), LookupError);
  CHECK_THROWS_AS(predict_rating(p, 0, 3), LookupError);

  Rng rng(1);
  const auto q = random_params(7, 9, 4, rng);
  for (Id u = 0; u < 7; ++u) {
    for (Id i = 0; i < 9; ++i) {
      CHECK(std::abs(predict_rating(q, u, i) - oracle_rate(q, u, i)) < 1e-12);
    }
  }
}

TEST_CASE("lfm_objective") {
  FactorParams p = FactorParams::zeros(2, 2, 1);
  p.alpha = 3;
  std::vector<Rating> perfect{{0, 0, 3}, {1, 1, 3}};
  CHECK(lfm_objective(p, perfect, 0.0) == 0.0);
  std::vector<Rating> one{{0, 1, 5}};
  CHECK(lfm_objective(p, one, 0.0) == 4.0);
  // alpha is not regularized.
  CHECK(lfm_objective(p, perfect, 10.0) == 0.0);

  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto q = random_params(5, 6, 3, rng);
    const auto r = random_ratings(5, 6, 30, rng);
    const double lambda = rng.uniform();
    double sq = 0.0, reg = 0.0;
    for (const auto& x : r) sq += std::pow(oracle_rate(q, x.user, x.item) - x.value, 2);
    for (double b : q.beta_user) reg += b * b;
    for (double b : q.beta_item) reg += b * b;
    for (double g : q.gamma_user.data()) reg += g * g;
    for (double g : q.gamma_item.data()) reg += g * g;
    const double oracle = sq + lambda * reg;
    CHECK(std::abs(lfm_objective(q, r, lambda) - oracle) < 1e-10 * std::max(1.0, oracle));
  }
}

TEST_CASE("lfm_gradient matches central differences") {
  Rng rng(3);
  const auto p = random_params(4, 5, 3, rng);
  const auto r = random_ratings(4, 5, 25, rng);
  const double lambda = 0.3;
  const FactorParams g = lfm_gradient(p, r, lambda);
  auto probe = [&](auto get) {
    const double h = 1e-5;
    FactorParams a = p, b = p;
    get(a) += h;
    get(b) -= h;
    const double fd = (lfm_objective(a, r, lambda) - lfm_objective(b, r, lambda)) / (2 * h);
    FactorParams gg = g;
    const double an = get(gg);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t u = rng.index(4), i = rng.index(5), f = rng.index(3);
    switch (t % 5) {
      case 0: probe([](FactorParams& q) -> double& { return q.alpha; }); break;
      case 1: probe([u](FactorParams& q) -> double& { return q.beta_user[u]; }); break;
      case 2: probe([i](FactorParams& q) -> double& { return q.beta_item[i]; }); break;
      case 3: probe([u, f](FactorParams& q) -> double& { return q.gamma_user(u, f); }); break;
      default: probe([i, f](FactorParams& q) -> double& { return q.gamma_item(i, f); }); break;
    }
  }
}

TEST_CASE("init_factors") {
  std::vector<Rating> r{{0, 0, 2}, {1, 1, 4}, {1, 0, 3}};
  const auto p = init_factors(2, 2, 4, r, 7);
  CHECK(p.alpha == 3.0);
  for (double b : p.beta_user) CHECK(b == 0.0);
  CHECK(p.k() == 4);
  CHECK(init_factors(2, 2, 4, r, 7) == p);
  CHECK_FALSE(init_factors(2, 2, 4, r, 8) == p);
}

TEST_CASE("fit_lfm recovers a rank-1 noiseless model") {
  Rng rng(4);
  const std::size_t users = 30, items = 30;
  std::vector<double> a(users), b(items);
  for (auto& x : a) x = rng.uniform(0.5, 1.5);
  for (auto& x : b) x = rng.uniform(0.5, 1.5);
  std::vector<Rating> r;
  for (Id u = 0; u < users; ++u) {
    for (Id i = 0; i < items; ++i) {
      if (rng.uniform() < 0.6) r.push_back({u, i, 1.0 + 2.0 * a[u] * b[i]});
    }
  }
  SgdOptions o;
  o.seed = 1;
  o.learning_rate = 0.02;
  o.decay = 0.99;
  const auto fit = fit_lfm(users, items, 1, r, {}, 0.0, o);
  const double rmse = std::sqrt(squared_error(fit.params, r) / r.size());
  CHECK(rmse < 0.01);
  // Bit-reproducible.
  CHECK(fit_lfm(users, items, 1, r, {}, 0.0, o).params == fit.params);
}

TEST_CASE("fit_lfm degenerate and regularized cases") {
  Rng rng(5);
  std::vector<Rating> r;
  for (Id u = 0; u < 20; ++u) {
    for (Id i = 0; i < 10; ++i) r.push_back({u, i, 4.0});
  }
  SgdOptions o;
  auto fit = fit_lfm(20, 10, 3, r, {}, 0.001, o);
  CHECK(std::abs(fit.params.alpha - 4.0) < 0.01);
  CHECK(std::abs(squared_error(fit.params, r)) < 1e-4 * r.size());
  // Factors carry no signal: interaction terms stay at initialization scale.
  double g = 0.0;
  for (Id u = 0; u < 20; ++u) {
    for (Id i = 0; i < 10; ++i) {
      g = std::max(g, std::abs(dot(fit.params.gamma_user.row(u), fit.params.gamma_item.row(i))));
    }
  }
  CHECK(g < 0.05);

  const auto noisy = random_ratings(20, 10, 150, rng);
  fit = fit_lfm(20, 10, 3, noisy, {}, 1e6, o);
  double norm = 0.0;
  for (double x : fit.params.gamma_user.data()) norm += x * x;
  for (double x : fit.params.gamma_item.data()) norm += x * x;
  CHECK(std::sqrt(norm) < 1e-3);

  CHECK_THROWS_AS(fit_lfm(20, 10, 3, {}, {}, 0.0, o), ValidationError);
  o.learning_rate = 50.0;
  o.decay = 1.0;
  CHECK_THROWS_AS(fit_lfm(20, 10, 3, noisy, {}, 0.0, o), TrainingError);
}

TEST_CASE("training objective is non-increasing at a small learning rate") {
  Rng rng(6);
  auto r = random_ratings(30, 20, 300, rng);
  SgdOptions o;
  o.learning_rate = 1e-3;
  o.max_epochs = 50;
  const auto fit = fit_lfm(30, 20, 3, r, {}, 0.001, o);
  for (std::size_t t = 1; t < fit.train_objective.size(); ++t) {
    CHECK(fit.train_objective[t] <= fit.train_objective[t - 1] + 1e-9);
  }
}

TEST_CASE("early stopping returns the best validation epoch") {
  Rng rng(7);
  const auto truth = random_params(15, 15, 2, rng);
  std::vector<Rating> train, validation;
  for (Id u = 0; u < 15; ++u) {
    for (Id i = 0; i < 15; ++i) {
      const Rating r{u, i, predict_rating(truth, u, i) + rng.normal(0, 1.0)};
      (rng.uniform() < 0.3 ? validation : train).push_back(r);
    }
  }
  SgdOptions o;
  o.learning_rate = 0.05;
  const auto fit = fit_lfm(15, 15, 5, train, validation, 0.0, o);
  REQUIRE(fit.best_epoch >= 1);
  const double best = fit.validation_error[fit.best_epoch - 1];
  for (double v : fit.validation_error) CHECK(best <= v);
  CHECK(squared_error(fit.params, validation) == doctest::Approx(best));
  CHECK(fit.validation_error.size() < o.max_epochs);
}

}  // namespace
}  // namespace jft
