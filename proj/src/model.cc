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

#include "jft/model.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "joint_problem.h"
#include "jft/bridge.h"
#include "jft/errors.h"
#include "json.hpp"

namespace jft {

using nlohmann::json;

std::string to_string(Mode mode) {
  return mode == Mode::kRating ? "rating" : "binary";
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kJft: return "jft";
    case Strategy::kHft: return "hft";
    case Strategy::kLfm: return "lfm";
  }
  return "jft";
}

Mode parse_mode(const std::string& s) {
  if (s == "rating") return Mode::kRating;
  if (s == "binary") return Mode::kBinary;
  throw ValidationError("unknown mode '" + s + "'");
}

Strategy parse_strategy(const std::string& s) {
  if (s == "jft") return Strategy::kJft;
  if (s == "hft") return Strategy::kHft;
  if (s == "lfm") return Strategy::kLfm;
  throw ValidationError("unknown strategy '" + s + "'");
}

void Hyperparams::validate() const {
  if (k < 1) throw ValidationError("K must be at least 1");
  if (!(lambda_l >= 0.0)) throw ValidationError("lambda_l must be >= 0");
  if (!(lambda_p >= 0.0)) throw ValidationError("lambda_p must be >= 0");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (!(step_scale > 0.0)) throw ValidationError("step scale must be positive");
  if (!(step_decay > 0.0)) throw ValidationError("step decay must be positive");
  if (!(tol >= 0.0)) throw ValidationError("tolerance must be >= 0");
}

std::vector<Observation> observations_of(const Corpus& corpus,
                                         std::span<const std::size_t> indices) {
  std::vector<Observation> out;
  out.reserve(indices.size());
  for (auto n : indices) {
    const auto& x = corpus.interactions.at(n);
    out.push_back({x.user, x.item, x.rating, static_cast<std::int64_t>(n)});
  }
  return out;
}

std::vector<double> document_theta(const JftModel& model, Id user, Id item) {
  const auto& p = model.params;
  if (user >= p.num_users() || item >= p.num_items()) {
    throw LookupError("document index out of range");
  }
  auto gu = p.gamma_user.row(user);
  auto gi = p.gamma_item.row(item);
  if (model.hyper.strategy == Strategy::kHft) {
    auto tu = logistic_normalize(gu, model.hyper.kappa);
    auto ti = logistic_normalize(gi, model.hyper.kappa);
    double s = 0.0;
    for (std::size_t k = 0; k < tu.size(); ++k) {
      tu[k] *= ti[k];
      s += tu[k];
    }
    for (double& v : tu) v /= s;
    return tu;
  }
  return product_randomize(gu, gi);
}

ObjectiveTerms jft_objective(const JftModel& model, const Corpus& corpus,
                             std::span<const Observation> train) {
  ObjectiveTerms t;
  for (const auto& o : train) {
    const double e = predict_rating(model.params, o.user, o.item) - o.rating;
    t.sq_error += e * e;
  }
  if (model.hyper.strategy != Strategy::kLfm) {
    std::vector<std::size_t> docs;
    std::vector<std::vector<double>> theta;
    for (const auto& o : train) {
      if (o.doc < 0) continue;
      docs.push_back(static_cast<std::size_t>(o.doc));
      theta.push_back(document_theta(model, o.user, o.item));
    }
    t.log_likelihood = log_likelihood(corpus, docs, theta, model.topics);
  }
  t.regularizer = regularizer(model.params);
  t.total = t.sq_error - model.hyper.lambda_l * t.log_likelihood +
            model.hyper.lambda_p * t.regularizer;
  if (!std::isfinite(t.sq_error)) {
    throw EvaluationError("squared-error term is not finite");
  }
  if (!std::isfinite(t.log_likelihood)) {
    throw EvaluationError("log-likelihood term is not finite");
  }
  if (!std::isfinite(t.regularizer)) {
    throw EvaluationError("regularizer term is not finite");
  }
  return t;
}

JftGradient jft_gradient(const JftModel& model, const Corpus& corpus,
                         std::span<const Observation> train) {
  FactorParams params = model.params;
  TopicState topics = model.topics;
  internal::JointProblem problem(corpus, train, model.hyper, params, topics);
  return problem.gradient();
}

double score(const JftModel& model, Id user, Id item) {
  return predict_rating(model.params, user, item);
}

double rmse_of(const FactorParams& params, std::span<const Observation> data) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& o : data) {
    const double e = predict_rating(params, o.user, o.item) - o.rating;
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(data.size()));
}

// ---------------------------------------------------------------------------

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto* map : {&corpus.users, &corpus.items, &corpus.cities,
                          &corpus.vocab}) {
    for (const auto& name : map->names()) mix(name);
    mix("|");
  }
  return h;
}

namespace {

constexpr int kModelVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                        const char* what) {
  if (!j.is_array() || j.size() != rows) {
    throw ValidationError(std::string(what) + " has the wrong number of rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto values = j[r].get<std::vector<double>>();
    if (values.size() != cols) {
      throw ValidationError(std::string(what) + " row has the wrong length");
    }
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

json hyper_to_json(const Hyperparams& h) {
  return {{"k", h.k},
          {"lambda_l", h.lambda_l},
          {"lambda_p", h.lambda_p},
          {"kappa", h.kappa},
          {"mode", to_string(h.mode)},
          {"strategy", to_string(h.strategy)},
          {"max_iters", h.max_iters},
          {"seed", h.seed},
          {"step_scale", h.step_scale},
          {"step_decay", h.step_decay},
          {"max_halvings", h.max_halvings},
          {"s1_sweeps", h.s1_sweeps},
          {"tol", h.tol},
          {"patience", h.patience},
          {"reject_uphill", h.reject_uphill}};
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  h.k = j.at("k").get<std::size_t>();
  h.lambda_l = j.at("lambda_l").get<double>();
  h.lambda_p = j.at("lambda_p").get<double>();
  h.kappa = j.at("kappa").get<double>();
  h.mode = parse_mode(j.at("mode").get<std::string>());
  h.strategy = parse_strategy(j.at("strategy").get<std::string>());
  h.max_iters = j.at("max_iters").get<std::size_t>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.step_scale = j.at("step_scale").get<double>();
  h.step_decay = j.at("step_decay").get<double>();
  h.max_halvings = j.at("max_halvings").get<std::size_t>();
  h.s1_sweeps = j.at("s1_sweeps").get<std::size_t>();
  h.tol = j.at("tol").get<double>();
  h.patience = j.at("patience").get<std::size_t>();
  h.reject_uphill = j.at("reject_uphill").get<bool>();
  h.validate();
  return h;
}

}  // namespace

void save_model(const JftModel& model, const Corpus& corpus,
                std::ostream& out) {
  const auto& p = model.params;
  json doc = {{"format", "jft-model"},
              {"version", kModelVersion},
              {"hyper", hyper_to_json(model.hyper)},
              {"alpha", p.alpha},
              {"beta_u", p.beta_user},
              {"beta_i", p.beta_item},
              {"gamma_u", matrix_to_json(p.gamma_user)},
              {"gamma_i", matrix_to_json(p.gamma_item)},
              {"phi_scores", matrix_to_json(model.topics.scores)},
              {"corpus_ref",
               {{"num_users", corpus.num_users()},
                {"num_items", corpus.num_items()},
                {"vocab_size", corpus.vocab_size()},
                {"fingerprint", corpus_fingerprint(corpus)}}}};
  out << doc.dump() << '\n';
}

void save_model(const JftModel& model, const Corpus& corpus,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  save_model(model, corpus, out);
}

JftModel load_model(std::istream& in, const Corpus& corpus) {
  JftModel m;
  try {
    json doc = json::parse(in);
    if (doc.value("format", "") != "jft-model") {
      throw ValidationError("not a model file");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      throw ValidationError("unsupported model version");
    }
    const auto& ref = doc.at("corpus_ref");
    if (ref.at("fingerprint").get<std::uint64_t>() != corpus_fingerprint(corpus)) {
      throw ValidationError("model was trained on a different corpus");
    }
    m.hyper = hyper_from_json(doc.at("hyper"));
    const std::size_t k = m.hyper.k;
    const std::size_t users = corpus.num_users(), items = corpus.num_items();
    m.params.alpha = doc.at("alpha").get<double>();
    m.params.beta_user = doc.at("beta_u").get<std::vector<double>>();
    m.params.beta_item = doc.at("beta_i").get<std::vector<double>>();
    if (m.params.beta_user.size() != users || m.params.beta_item.size() != items) {
      throw ValidationError("bias vectors do not match the corpus");
    }
    m.params.gamma_user = matrix_from_json(doc.at("gamma_u"), users, k, "gamma_u");
    m.params.gamma_item = matrix_from_json(doc.at("gamma_i"), items, k, "gamma_i");
    m.topics = make_topic_state(k, corpus.vocab_size());
    m.topics.scores = matrix_from_json(doc.at("phi_scores"), k,
                                       corpus.vocab_size(), "phi_scores");
    normalize_phi(m.topics);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

JftModel load_model(const std::string& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path);
  return load_model(in, corpus);
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iter,sq_error,log_likelihood,objective\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.iter << ',' << r.sq_error << ',' << r.log_likelihood << ','
        << r.objective << '\n';
  }
}

void write_validation_csv(const std::vector<TraceRow>& trace,
                          std::ostream& out) {
  out << "iter,validation_rmse\n";
  out << std::setprecision(17);
  for (const auto& r : trace) out << r.iter << ',' << r.validation_rmse << '\n';
}

}  // namespace jft
