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

#include "jft/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "jft/errors.h"
#include "jft/random.h"
#include "json.hpp"

namespace jft {

using nlohmann::json;

Id IdMap::intern(std::string_view name) {
  std::string key(name);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const Id id = static_cast<Id>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<Id> IdMap::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Id IdMap::at(std::string_view name) const {
  auto id = find(name);
  if (!id) throw LookupError("unknown name '" + std::string(name) + "'");
  return *id;
}

const std::string& IdMap::name(Id id) const {
  if (id >= names_.size()) {
    throw LookupError("id " + std::to_string(id) + " out of range");
  }
  return names_[id];
}

void validate(const Corpus& c) {
  if (c.user_city.size() != c.num_users()) {
    throw ValidationError("user_city size does not match user count");
  }
  if (c.item_city.size() != c.num_items()) {
    throw ValidationError("item_city size does not match item count");
  }
  for (Id city : c.user_city) {
    if (city >= c.num_cities()) throw ValidationError("user city out of range");
  }
  for (Id city : c.item_city) {
    if (city >= c.num_cities()) throw ValidationError("item city out of range");
  }
  std::unordered_set<std::uint64_t> pairs;
  for (std::size_t n = 0; n < c.interactions.size(); ++n) {
    const Interaction& x = c.interactions[n];
    const std::string where = "interaction " + std::to_string(n) + ": ";
    if (x.user >= c.num_users()) throw ValidationError(where + "user id");
    if (x.item >= c.num_items()) throw ValidationError(where + "item id");
    if (x.city != c.item_city[x.item]) {
      throw ValidationError(where + "city differs from the item's city");
    }
    if (!std::isfinite(x.rating)) throw ValidationError(where + "rating");
    for (Id t : x.tokens) {
      if (t >= c.vocab_size()) throw ValidationError(where + "token id");
    }
    const std::uint64_t key = (std::uint64_t{x.user} << 32) | x.item;
    if (!pairs.insert(key).second) {
      throw ValidationError(where + "duplicate (user, item) pair");
    }
  }
}

std::vector<std::vector<std::size_t>> records_by_user(const Corpus& corpus) {
  std::vector<std::vector<std::size_t>> out(corpus.num_users());
  for (std::size_t n = 0; n < corpus.interactions.size(); ++n) {
    out[corpus.interactions[n].user].push_back(n);
  }
  return out;
}

std::vector<std::vector<Id>> items_by_city(const Corpus& corpus) {
  std::vector<std::vector<Id>> out(corpus.num_cities());
  for (Id i = 0; i < corpus.num_items(); ++i) {
    out[corpus.item_city[i]].push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text,
                                  const StopwordSet& stopwords) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !stopwords.contains(current)) {
      out.push_back(current);
    }
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

StopwordSet parse_stopwords(std::istream& in) {
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos || line[begin] == '#') continue;
    auto end = line.find_last_not_of(" \t\r");
    std::string word = line.substr(begin, end - begin + 1);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    words.insert(std::move(word));
  }
  return words;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stopword file " + path);
  return parse_stopwords(in);
}

// ---------------------------------------------------------------------------

namespace {

struct RawRecord {
  std::size_t line = 0;
  std::string user, item, city, home_city, text;
  double rating = 0.0;
};

// RFC 4180 style: quoted fields may contain commas, doubled quotes and line
// breaks. Returns false at end of input.
bool read_csv_row(std::istream& in, std::size_t& line_no,
                  std::vector<std::string>& fields, std::size_t& start_line) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  start_line = line_no;
  std::string field;
  bool quoted = false;
  std::size_t pos = 0;
  while (true) {
    if (pos >= line.size()) {
      if (quoted) {
        if (!std::getline(in, line)) {
          throw ParseError(start_line, "unterminated quoted field");
        }
        ++line_no;
        field.push_back('\n');
        pos = 0;
        continue;
      }
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    }
    const char c = line[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < line.size() && line[pos] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
}

std::vector<RawRecord> read_jsonl(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record is not an object");
    RawRecord r;
    r.line = line_no;
    auto string_field = [&](const char* key, bool required) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end()) {
        if (required) {
          throw ParseError(line_no, std::string("missing field '") + key + "'");
        }
        return {};
      }
      if (!it->is_string()) {
        throw ParseError(line_no, std::string("field '") + key +
                                      "' is not a string");
      }
      return it->get<std::string>();
    };
    r.user = string_field("user", true);
    r.item = string_field("item", true);
    r.city = string_field("city", true);
    r.text = string_field("text", true);
    r.home_city = string_field("user_city", false);
    auto rating = obj.find("rating");
    if (rating == obj.end() || !rating->is_number()) {
      throw ParseError(line_no, "missing or non-numeric field 'rating'");
    }
    r.rating = rating->get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawRecord> read_csv(std::istream& in) {
  std::vector<RawRecord> out;
  std::size_t line_no = 0, start = 0;
  std::vector<std::string> fields;
  if (!read_csv_row(in, line_no, fields, start)) return out;
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < fields.size(); ++c) column[fields[c]] = c;
  for (const char* key : {"user", "item", "city", "rating", "text"}) {
    if (!column.contains(key)) {
      throw ParseError(1, std::string("header lacks column '") + key + "'");
    }
  }
  const bool has_home = column.contains("user_city");
  while (read_csv_row(in, line_no, fields, start)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != column.size()) {
      throw ParseError(start, "expected " + std::to_string(column.size()) +
                                  " fields, got " +
                                  std::to_string(fields.size()));
    }
    RawRecord r;
    r.line = start;
    r.user = fields[column["user"]];
    r.item = fields[column["item"]];
    r.city = fields[column["city"]];
    r.text = fields[column["text"]];
    if (has_home) r.home_city = fields[column["user_city"]];
    const std::string& rating = fields[column["rating"]];
    std::size_t used = 0;
    try {
      r.rating = std::stod(rating, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rating.size()) {
      throw ParseError(start, "rating '" + rating + "' is not a number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawRecord> filter_min_reviews(std::vector<RawRecord> records,
                                          std::size_t min_reviews) {
  if (min_reviews == 0) return records;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.user];
  std::erase_if(records,
                [&](const RawRecord& r) { return counts[r.user] < min_reviews; });
  return records;
}

std::vector<RawRecord> filter_cities(std::vector<RawRecord> records,
                                     const std::vector<std::string>& keep) {
  if (keep.empty()) return records;
  std::unordered_set<std::string> allowed(keep.begin(), keep.end());
  std::erase_if(records,
                [&](const RawRecord& r) { return !allowed.contains(r.city); });
  return records;
}

}  // namespace

Corpus ingest(std::istream& in, const IngestOptions& options) {
  std::vector<RawRecord> raw = options.format == InputFormat::kJsonl
                                   ? read_jsonl(in)
                                   : read_csv(in);
  for (const auto& r : raw) {
    if (!(r.rating >= 1.0 && r.rating <= 5.0)) {
      std::ostringstream msg;
      msg << "rating " << r.rating << " outside [1, 5]";
      throw ParseError(r.line, msg.str());
    }
  }

  // Duplicates are resolved on the full input so that the policy does not
  // depend on the filters.
  {
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    std::vector<RawRecord> unique;
    for (auto& r : raw) {
      auto key = std::make_pair(r.user, r.item);
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen.emplace(std::move(key), unique.size());
        unique.push_back(std::move(r));
      } else if (options.duplicates == DuplicatePolicy::kReject) {
        throw ParseError(r.line, "duplicate (user, item) pair ('" + r.user +
                                     "', '" + r.item +
                                     "') first seen on line " +
                                     std::to_string(unique[it->second].line));
      } else {
        unique[it->second] = std::move(r);
      }
    }
    raw = std::move(unique);
  }

  if (options.filter_order == FilterOrder::kBefore) {
    raw = filter_cities(filter_min_reviews(std::move(raw),
                                           options.min_user_reviews),
                        options.keep_cities);
  } else {
    raw = filter_min_reviews(filter_cities(std::move(raw), options.keep_cities),
                             options.min_user_reviews);
  }
  if (raw.empty()) throw ValidationError("corpus is empty");

  Corpus c;
  std::vector<std::string> declared_home;
  for (const auto& r : raw) {
    Interaction x;
    x.user = c.users.intern(r.user);
    x.item = c.items.intern(r.item);
    x.city = c.cities.intern(r.city);
    x.rating = r.rating;
    if (x.item == c.item_city.size()) {
      c.item_city.push_back(x.city);
    } else if (c.item_city[x.item] != x.city) {
      throw ParseError(r.line, "item '" + r.item + "' listed in two cities");
    }
    if (x.user == declared_home.size()) declared_home.push_back(r.home_city);
    if (!r.home_city.empty()) {
      if (declared_home[x.user].empty()) declared_home[x.user] = r.home_city;
      if (declared_home[x.user] != r.home_city) {
        throw ParseError(r.line, "user '" + r.user + "' has two home cities");
      }
    }
    for (const auto& word : tokenize(r.text, options.stopwords)) {
      x.tokens.push_back(c.vocab.intern(word));
    }
    c.interactions.push_back(std::move(x));
  }

  c.user_city.assign(c.num_users(), 0);
  std::vector<std::map<Id, std::size_t>> city_counts(c.num_users());
  for (const auto& x : c.interactions) ++city_counts[x.user][x.city];
  for (Id u = 0; u < c.num_users(); ++u) {
    if (!declared_home[u].empty()) {
      // A declared home city need not host any of the user's records.
      c.user_city[u] = c.cities.intern(declared_home[u]);
      continue;
    }
    std::size_t best = 0;
    for (const auto& [city, count] : city_counts[u]) {
      if (count > best) {
        best = count;
        c.user_city[u] = city;
      }
    }
  }
  validate(c);
  return c;
}

Corpus ingest(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file " + path);
  return ingest(in, options);
}

// ---------------------------------------------------------------------------

namespace {
constexpr int kCorpusVersion = 1;
}

void save_corpus(const Corpus& c, std::ostream& out) {
  json interactions = json::array();
  for (const auto& x : c.interactions) {
    interactions.push_back({{"user", x.user},
                            {"item", x.item},
                            {"city", x.city},
                            {"rating", x.rating},
                            {"tokens", x.tokens}});
  }
  json doc = {{"format", "jft-corpus"},
              {"version", kCorpusVersion},
              {"users", c.users.names()},
              {"items", c.items.names()},
              {"cities", c.cities.names()},
              {"vocab", c.vocab.names()},
              {"user_city", c.user_city},
              {"item_city", c.item_city},
              {"interactions", std::move(interactions)}};
  out << doc.dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  save_corpus(corpus, out);
}

Corpus load_corpus(std::istream& in) {
  Corpus c;
  try {
    json doc = json::parse(in);
    if (doc.value("format", "") != "jft-corpus") {
      throw ValidationError("not a corpus file");
    }
    if (doc.at("version").get<int>() != kCorpusVersion) {
      throw ValidationError("unsupported corpus version");
    }
    auto fill = [&](IdMap& map, const char* key) {
      for (const auto& name : doc.at(key)) {
        const auto before = map.size();
        map.intern(name.get<std::string>());
        if (map.size() == before) {
          throw ValidationError(std::string("repeated name in ") + key);
        }
      }
    };
    fill(c.users, "users");
    fill(c.items, "items");
    fill(c.cities, "cities");
    fill(c.vocab, "vocab");
    c.user_city = doc.at("user_city").get<std::vector<Id>>();
    c.item_city = doc.at("item_city").get<std::vector<Id>>();
    for (const auto& x : doc.at("interactions")) {
      Interaction r;
      r.user = x.at("user").get<Id>();
      r.item = x.at("item").get<Id>();
      r.city = x.at("city").get<Id>();
      r.rating = x.at("rating").get<double>();
      r.tokens = x.at("tokens").get<std::vector<Id>>();
      c.interactions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed corpus file: ") + e.what());
  }
  validate(c);
  return c;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path);
  return load_corpus(in);
}

// ---------------------------------------------------------------------------

std::vector<FoldSplit> split_folds(const Corpus& corpus, std::size_t k,
                                   std::uint64_t seed,
                                   std::vector<std::string>* warnings) {
  if (k < 2) throw ValidationError("fold count must be at least 2");
  std::vector<std::vector<std::size_t>> test(k);
  auto by_user = records_by_user(corpus);
  // Rotating the starting fold keeps fold sizes balanced across users whose
  // record counts are not multiples of k.
  std::size_t offset = 0;
  for (Id u = 0; u < by_user.size(); ++u) {
    auto records = by_user[u];
    if (records.size() < k && warnings) {
      warnings->push_back("user '" + corpus.users.name(u) + "' has " +
                          std::to_string(records.size()) +
                          " records, fewer than " + std::to_string(k) +
                          " folds");
    }
    Rng rng(mix_seed(seed, u));
    rng.shuffle(records);
    for (std::size_t r = 0; r < records.size(); ++r) {
      test[(offset + r) % k].push_back(records[r]);
    }
    offset = (offset + records.size()) % k;
  }
  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].fold_id = static_cast<int>(f);
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    std::vector<char> in_test(corpus.size(), 0);
    for (auto n : test[f]) in_test[n] = 1;
    for (std::size_t n = 0; n < corpus.size(); ++n) {
      if (!in_test[n]) folds[f].train.push_back(n);
    }
  }
  return folds;
}

Holdout holdout_per_user(const Corpus& corpus, std::size_t n,
                         std::uint64_t seed) {
  if (n < 1) throw ValidationError("holdout size must be at least 1");
  std::vector<char> in_test(corpus.size(), 0);
  auto by_user = records_by_user(corpus);
  for (Id u = 0; u < by_user.size(); ++u) {
    auto records = by_user[u];
    if (records.size() <= n) continue;
    Rng rng(mix_seed(seed, u));
    rng.shuffle(records);
    for (std::size_t r = 0; r < n; ++r) in_test[records[r]] = 1;
  }
  Holdout h;
  for (std::size_t x = 0; x < corpus.size(); ++x) {
    (in_test[x] ? h.test : h.train).push_back(x);
  }
  return h;
}

std::vector<UserCityPair> select_cross_city_pairs(const Corpus& corpus,
                                                  std::size_t min_records) {
  std::map<std::pair<Id, Id>, std::vector<std::size_t>> groups;
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& x = corpus.interactions[n];
    if (x.city != corpus.user_city[x.user]) {
      groups[{x.user, x.city}].push_back(n);
    }
  }
  std::vector<UserCityPair> out;
  for (auto& [key, records] : groups) {
    if (records.size() >= min_records) {
      out.push_back({key.first, key.second, std::move(records), {}});
    }
  }
  return out;
}

CrossCityHoldout holdout_cross_city(const Corpus& corpus, std::size_t n,
                                    std::size_t min_records,
                                    std::uint64_t seed) {
  if (n < 1) throw ValidationError("holdout size must be at least 1");
  if (min_records < n) {
    throw ValidationError("cross-city minimum must be at least the holdout");
  }
  CrossCityHoldout h;
  h.pairs = select_cross_city_pairs(corpus, min_records);
  std::vector<char> in_test(corpus.size(), 0);
  for (std::size_t p = 0; p < h.pairs.size(); ++p) {
    auto records = h.pairs[p].records;
    Rng rng(mix_seed(seed, p));
    rng.shuffle(records);
    records.resize(n);
    std::sort(records.begin(), records.end());
    for (auto r : records) in_test[r] = 1;
    h.pairs[p].held_out = std::move(records);
  }
  for (std::size_t x = 0; x < corpus.size(); ++x) {
    (in_test[x] ? h.test : h.train).push_back(x);
  }
  return h;
}

std::vector<double> feature_city_distribution(const Corpus& corpus,
                                              std::string_view word) {
  auto id = corpus.vocab.find(word);
  if (!id) {
    throw LookupError("word '" + std::string(word) + "' not in vocabulary");
  }
  std::vector<double> counts(corpus.num_cities(), 0.0);
  double total = 0.0;
  for (const auto& x : corpus.interactions) {
    if (std::find(x.tokens.begin(), x.tokens.end(), *id) != x.tokens.end()) {
      counts[x.city] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) {
    throw LookupError("word '" + std::string(word) + "' occurs in no review");
  }
  for (double& v : counts) v /= total;
  return counts;
}

}  // namespace jft
