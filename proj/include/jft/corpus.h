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

#ifndef JFT_CORPUS_H_
#define JFT_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace jft {

using Id = std::uint32_t;

// Bidirectional string <-> dense index map. Indices are assigned in insertion
// order and never change.
class IdMap {
 public:
  Id intern(std::string_view name);
  std::optional<Id> find(std::string_view name) const;
  Id at(std::string_view name) const;  // throws LookupError
  const std::string& name(Id id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const IdMap& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Id> index_;
};

// One (user, item, city, rating, review) record. city is the item's city.
struct Interaction {
  Id user = 0;
  Id item = 0;
  Id city = 0;
  double rating = 0.0;
  std::vector<Id> tokens;

  bool operator==(const Interaction&) const = default;
};

// Immutable once built; safe to share between readers.
struct Corpus {
  std::vector<Interaction> interactions;
  IdMap users;
  IdMap items;
  IdMap cities;
  IdMap vocab;
  std::vector<Id> user_city;  // home city per user
  std::vector<Id> item_city;

  std::size_t num_users() const { return users.size(); }
  std::size_t num_items() const { return items.size(); }
  std::size_t num_cities() const { return cities.size(); }
  std::size_t vocab_size() const { return vocab.size(); }
  std::size_t size() const { return interactions.size(); }

  bool operator==(const Corpus&) const = default;
};

// Throws ValidationError describing the first violated invariant.
void validate(const Corpus& corpus);

// Interaction indices of each user, in corpus order.
std::vector<std::vector<std::size_t>> records_by_user(const Corpus& corpus);
// Item ids located in each city, ascending.
std::vector<std::vector<Id>> items_by_city(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Tokenization

using StopwordSet = std::unordered_set<std::string>;

// Lowercases, splits on anything that is not an ASCII letter or digit, drops
// stopwords and tokens shorter than two characters.
std::vector<std::string> tokenize(std::string_view text,
                                  const StopwordSet& stopwords);

// One word per line; blank lines and lines starting with '#' are ignored.
StopwordSet load_stopwords(const std::string& path);
StopwordSet parse_stopwords(std::istream& in);

// ---------------------------------------------------------------------------
// Ingestion

enum class InputFormat { kJsonl, kCsv };
enum class DuplicatePolicy { kReject, kLastWins };
// Whether the minimum-reviews-per-user filter runs before or after the city
// filter.
enum class FilterOrder { kBefore, kAfter };

struct IngestOptions {
  InputFormat format = InputFormat::kJsonl;
  DuplicatePolicy duplicates = DuplicatePolicy::kReject;
  StopwordSet stopwords;
  std::size_t min_user_reviews = 0;
  std::vector<std::string> keep_cities;  // empty keeps every city
  FilterOrder filter_order = FilterOrder::kBefore;
};

// Records carry keys user, item, city, rating, text and optionally
// user_city (the user's home city). Without user_city a user's home city is
// the city of most of their records, lowest id on ties.
Corpus ingest(const std::string& path, const IngestOptions& options);
Corpus ingest(std::istream& in, const IngestOptions& options);

// Versioned JSON container. save then load reproduces the corpus exactly.
void save_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);

// ---------------------------------------------------------------------------
// Splits

struct FoldSplit {
  std::vector<std::size_t> train;  // ascending interaction indices
  std::vector<std::size_t> test;
  int fold_id = 0;
};

// User-stratified k-fold split. Users with fewer than k records cannot appear
// in every test fold; one warning per such user is appended to `warnings`.
std::vector<FoldSplit> split_folds(const Corpus& corpus, std::size_t k,
                                   std::uint64_t seed,
                                   std::vector<std::string>* warnings = nullptr);

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// n random records per user with more than n records go to test.
Holdout holdout_per_user(const Corpus& corpus, std::size_t n,
                         std::uint64_t seed);

// A user together with a city other than their home city.
struct UserCityPair {
  Id user = 0;
  Id city = 0;
  std::vector<std::size_t> records;  // the user's records in that city
  std::vector<std::size_t> held_out;  // filled by holdout_cross_city

  bool operator==(const UserCityPair&) const = default;
};

// Pairs where the user has at least min_records records in a non-home city.
std::vector<UserCityPair> select_cross_city_pairs(const Corpus& corpus,
                                                  std::size_t min_records);

struct CrossCityHoldout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<UserCityPair> pairs;
};

// For every selected pair, n of its records are held out.
CrossCityHoldout holdout_cross_city(const Corpus& corpus, std::size_t n,
                                    std::size_t min_records,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Regional features

// Fraction of the reviews mentioning `word` that fall in each city, indexed
// by city id. Throws LookupError if the word is unknown or never used.
std::vector<double> feature_city_distribution(const Corpus& corpus,
                                              std::string_view word);

}  // namespace jft

#endif  // JFT_CORPUS_H_
