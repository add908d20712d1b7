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

#include "jft/bridge.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jft/errors.h"
#include "jft/linalg.h"
#include "jft/random.h"

namespace jft {

std::vector<double> logistic_normalize(std::span<const double> gamma,
                                       double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  std::vector<double> scaled(gamma.begin(), gamma.end());
  for (double& v : scaled) v *= kappa;
  return softmax(scaled);
}

std::vector<double> product_randomize(std::span<const double> gamma_user,
                                      std::span<const double> gamma_item) {
  if (gamma_user.size() != gamma_item.size() || gamma_user.empty()) {
    throw ValidationError("factor vectors must share a positive length");
  }
  std::vector<double> products(gamma_user.size());
  for (std::size_t k = 0; k < products.size(); ++k) {
    products[k] = gamma_user[k] * gamma_item[k];
  }
  return softmax(products);
}

RandomizationFn make_logistic(double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  return {"logistic",
          [kappa](std::span<const double> x) {
            return logistic_normalize(x, kappa);
          },
          kappa};
}

RandomizationFn make_reversed_logistic(double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  return {"reversed",
          [kappa](std::span<const double> x) {
            std::vector<double> neg(x.begin(), x.end());
            for (double& v : neg) v = -kappa * v;
            return softmax(neg);
          },
          kappa};
}

RandomizationFn make_identity() {
  return {"identity",
          [](std::span<const double> x) {
            return std::vector<double>(x.begin(), x.end());
          },
          std::nullopt};
}

RandomizationFn make_randomization(const std::string& name, double kappa) {
  if (name == "logistic") return make_logistic(kappa);
  if (name == "reversed") return make_reversed_logistic(kappa);
  if (name == "identity") return make_identity();
  throw ValidationError("unknown randomization function '" + name + "'");
}

namespace {

std::vector<double> evaluate(const RandomizationFn& f,
                             std::span<const double> x) {
  auto y = f(x);
  bool finite = y.size() == x.size();
  for (double v : y) finite = finite && std::isfinite(v);
  if (!finite) {
    std::ostringstream msg;
    msg << f.name << " produced a non-finite or misshaped output for input [";
    for (std::size_t k = 0; k < x.size(); ++k) msg << (k ? ", " : "") << x[k];
    msg << "]";
    throw EvaluationError(msg.str());
  }
  return y;
}

}  // namespace

AxiomReport check_vector_axioms(const RandomizationFn& f, std::size_t k,
                                std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (k < 1) throw ValidationError("K must be at least 1");
  AxiomReport report;
  Rng rng(seed);
  std::vector<double> x(k);
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& v : x) v = rng.normal();
    auto y = evaluate(f, x);
    ++report.trials;
    double sum = 0.0;
    bool bounded = true;
    for (double v : y) {
      sum += v;
      bounded = bounded && v >= 0.0 && v <= 1.0;
    }
    if (!bounded || std::abs(sum - 1.0) > 1e-9) {
      report.stochastic_ok = false;
      if (!report.witness) report.witness = AxiomWitness{x, y, "stochastic"};
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (x[i] < x[j] - kOrderTolerance && y[i] >= y[j] + kOrderTolerance) {
          report.monotone_ok = false;
          if (!report.witness) report.witness = AxiomWitness{x, y, "monotone"};
        }
      }
    }
  }
  return report;
}

namespace {

std::optional<ProductViolation> make_violation(
    const RandomizationFn& f, std::vector<double> g1, std::vector<double> g2,
    std::vector<double> g3, std::vector<double> g4) {
  ProductViolation v;
  v.lhs_dot = dot(g1, g2);
  v.rhs_dot = dot(g3, g4);
  if (v.lhs_dot > v.rhs_dot) {
    std::swap(g1, g3);
    std::swap(g2, g4);
    std::swap(v.lhs_dot, v.rhs_dot);
  }
  if (!(v.lhs_dot < v.rhs_dot - kOrderTolerance)) return std::nullopt;
  v.f_lhs_dot = dot(evaluate(f, g1), evaluate(f, g2));
  v.f_rhs_dot = dot(evaluate(f, g3), evaluate(f, g4));
  if (!(v.f_lhs_dot >= v.f_rhs_dot)) return std::nullopt;
  v.gamma1 = std::move(g1);
  v.gamma2 = std::move(g2);
  v.gamma3 = std::move(g3);
  v.gamma4 = std::move(g4);
  return v;
}

// Scaling alpha by t > 1 moves f's mass by delta = f(t alpha) - f(alpha),
// which sums to zero. A beta that is 0 on delta's positive support and 1 on
// its negative support (or the reverse) gives delta . f(beta) of known sign,
// so whenever alpha . beta has the opposite sign the pair
// (alpha, beta), (t alpha, beta) breaks product-level monotonicity.
std::optional<ProductViolation> constructive_attempt(const RandomizationFn& f,
                                                     std::size_t k, Rng& rng) {
  std::vector<double> alpha(k);
  for (double& v : alpha) v = rng.uniform(-3.0, 3.0);
  const double t = 1.0 + rng.uniform(0.1, 3.0);
  std::vector<double> scaled = alpha;
  for (double& v : scaled) v *= t;
  const auto fa = evaluate(f, alpha);
  const auto ft = evaluate(f, scaled);
  std::vector<double> ones_on_negative(k, 0.0), ones_on_positive(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double delta = ft[i] - fa[i];
    if (delta < 0.0) ones_on_negative[i] = 1.0;
    if (delta > 0.0) ones_on_positive[i] = 1.0;
  }
  for (const auto* beta : {&ones_on_negative, &ones_on_positive}) {
    if (auto v = make_violation(f, alpha, *beta, scaled, *beta)) return v;
  }
  return std::nullopt;
}

std::optional<ProductViolation> random_attempt(const RandomizationFn& f,
                                               std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> g(4, std::vector<double>(k));
  for (auto& vec : g) {
    for (double& v : vec) v = rng.uniform(-3.0, 3.0);
  }
  return make_violation(f, g[0], g[1], g[2], g[3]);
}

}  // namespace

bool verify_violation(const RandomizationFn& f, const ProductViolation& v) {
  const std::size_t k = v.gamma1.size();
  if (k == 0 || v.gamma2.size() != k || v.gamma3.size() != k ||
      v.gamma4.size() != k) {
    return false;
  }
  const double lhs = dot(v.gamma1, v.gamma2);
  const double rhs = dot(v.gamma3, v.gamma4);
  const double f_lhs = dot(evaluate(f, v.gamma1), evaluate(f, v.gamma2));
  const double f_rhs = dot(evaluate(f, v.gamma3), evaluate(f, v.gamma4));
  return lhs < rhs - kOrderTolerance && f_lhs >= f_rhs;
}

std::optional<ProductViolation> find_product_violation(
    const RandomizationFn& f, std::size_t k, std::size_t budget,
    std::uint64_t seed) {
  if (k < 1) throw ValidationError("K must be at least 1");
  Rng rng(seed);
  for (std::size_t trial = 1; trial <= budget; ++trial) {
    if (auto v = constructive_attempt(f, k, rng)) {
      v->trial = trial;
      v->method = "constructive";
      return v;
    }
    if (auto v = random_attempt(f, k, rng)) {
      v->trial = trial;
      v->method = "random";
      return v;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("spearman needs two equal-length samples of size >= 2");
  }
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double dot_order_correlation(const RandomizationFn& f, std::size_t k,
                             std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> a(k), b(k), raw, mapped;
  for (std::size_t n = 0; n < pairs; ++n) {
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    raw.push_back(dot(a, b));
    mapped.push_back(dot(evaluate(f, a), evaluate(f, b)));
  }
  return spearman(raw, mapped);
}

double product_order_correlation(std::size_t k, std::size_t pairs,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> a(k), b(k), products(k), raw, mapped;
  for (std::size_t n = 0; n < pairs; ++n) {
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    for (std::size_t i = 0; i < k; ++i) products[i] = a[i] * b[i];
    raw.push_back(dot(a, b));
    mapped.push_back(log_sum_exp(products));
  }
  return spearman(raw, mapped);
}

}  // namespace jft
