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

#ifndef JFT_BRIDGE_H_
#define JFT_BRIDGE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jft {

// Tolerance used when testing the strict inequalities of the axioms.
inline constexpr double kOrderTolerance = 1e-12;

// Maps a real K-vector to a real K-vector. A well-behaved instance returns a
// stochastic vector that preserves the ordering of its input.
struct RandomizationFn {
  std::string name;
  std::function<std::vector<double>(std::span<const double>)> eval;
  std::optional<double> kappa;

  std::vector<double> operator()(std::span<const double> x) const {
    return eval(x);
  }
};

// theta_k = exp(kappa * gamma_k) / sum_k' exp(kappa * gamma_k').
std::vector<double> logistic_normalize(std::span<const double> gamma,
                                       double kappa);

// theta_k = exp(gu_k * gi_k) / sum_k' exp(gu_k' * gi_k').
std::vector<double> product_randomize(std::span<const double> gamma_user,
                                      std::span<const double> gamma_item);

RandomizationFn make_logistic(double kappa);
// softmax(-kappa * gamma): stochastic but order-reversing.
RandomizationFn make_reversed_logistic(double kappa);
// Not stochastic.
RandomizationFn make_identity();
// Looks up one of the above by name: logistic, reversed, identity.
RandomizationFn make_randomization(const std::string& name, double kappa);

struct AxiomWitness {
  std::vector<double> input;
  std::vector<double> output;
  std::string violation;  // "stochastic" or "monotone"
};

struct AxiomReport {
  bool stochastic_ok = true;
  bool monotone_ok = true;
  std::size_t trials = 0;
  std::optional<AxiomWitness> witness;  // first violation found

  bool ok() const { return stochastic_ok && monotone_ok; }
};

// Samples N(0, 1)^K inputs and checks 0 <= f_i <= 1, sum f = 1 (1e-9) and
// gamma_i < gamma_j => f_i < f_j. Throws EvaluationError on non-finite
// output.
AxiomReport check_vector_axioms(const RandomizationFn& f, std::size_t k,
                                std::size_t trials, std::uint64_t seed);

// A quadruple with gamma1.gamma2 < gamma3.gamma4 but
// f(gamma1).f(gamma2) >= f(gamma3).f(gamma4).
struct ProductViolation {
  std::vector<double> gamma1, gamma2, gamma3, gamma4;
  double lhs_dot = 0.0;    // gamma1 . gamma2
  double rhs_dot = 0.0;    // gamma3 . gamma4
  double f_lhs_dot = 0.0;  // f(gamma1) . f(gamma2)
  double f_rhs_dot = 0.0;  // f(gamma3) . f(gamma4)
  std::size_t trial = 0;   // 1-based trial that produced it
  std::string method;      // "constructive" or "random"
};

// Recomputes the four dot products from the vectors and checks the strict
// ordering on the inputs and its failure on the outputs.
bool verify_violation(const RandomizationFn& f, const ProductViolation& v);

// Each trial tries the constructive recipe (scale a random alpha by t > 1 and
// pair both with a 0/1 vector built from the sign pattern of
// f(t alpha) - f(alpha)) and then one uniform draw over [-3, 3]^K. Returns the
// first verified quadruple, or nothing once `budget` trials are spent.
std::optional<ProductViolation> find_product_violation(
    const RandomizationFn& f, std::size_t k, std::size_t budget,
    std::uint64_t seed);

// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

// Correlation between gamma_u . gamma_i and f(gamma_u) . f(gamma_i) over
// random N(0, 1)^K pairs.
double dot_order_correlation(const RandomizationFn& f, std::size_t k,
                             std::size_t pairs, std::uint64_t seed);

// Correlation between gamma_u . gamma_i and the log normalizer of the
// product-level randomization, log sum_k exp(gu_k * gi_k).
double product_order_correlation(std::size_t k, std::size_t pairs,
                                 std::uint64_t seed);

}  // namespace jft

#endif  // JFT_BRIDGE_H_
