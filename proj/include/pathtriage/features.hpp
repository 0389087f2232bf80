// Copyright 2026 The pathtriage Authors.
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

// Word tokenization, n-grams, TF-IDF featurization and WordPiece
// tokenization against a fixed vocabulary.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pathtriage/errors.hpp"

namespace pathtriage {

namespace detail {

// Length in bytes of a whitespace sequence starting at s[i], or 0. Covers
// ASCII whitespace and the UTF-8 encodings of the Unicode White_Space set.
inline std::size_t whitespace_at(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  const unsigned c0 = b(0);
  if (c0 == ' ' || (c0 >= 0x09 && c0 <= 0x0D)) return 1;
  if (c0 == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;
  if (c0 == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;
  if (c0 == 0xE2 && b(1) == 0x80 &&
      ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9 ||
       b(2) == 0xAF)) {
    return 3;
  }
  if (c0 == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;
  if (c0 == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;
  return 0;
}

inline bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
         (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

}  // namespace detail

// Lowercases ASCII, splits on whitespace and emits each ASCII punctuation
// character as its own token. Non-ASCII bytes are kept as word characters.
inline std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (const auto ws = detail::whitespace_at(text, i); ws > 0) {
      flush();
      i += ws;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_ascii_punct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      current.push_back(static_cast<char>(c));
    }
    ++i;
  }
  flush();
  return tokens;
}

// Contiguous n-grams joined by a single space, grouped by ascending order
// and in reading order within each order.
inline std::vector<std::string> ngrams(std::span<const std::string> tokens,
                                       std::span<const int> orders) {
  std::vector<int> sorted(orders.begin(), orders.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::string> out;
  for (int order : sorted) {
    if (order < 1) throw ValidationError("n-gram order must be >= 1");
    const auto n = static_cast<std::size_t>(order);
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      std::string gram = tokens[start];
      for (std::size_t k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[start + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

// Sparse vector with strictly increasing indices.
struct FeatureVector {
  std::vector<std::pair<std::size_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const {
    double s = 0.0;
    for (const auto& [_, v] : entries) s += v * v;
    return std::sqrt(s);
  }
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df,
             std::size_t total_documents)
      : terms_(std::move(terms)),
        df_(std::move(df)),
        total_documents_(total_documents) {
    if (terms_.size() != df_.size()) {
      throw ValidationError("vocabulary terms and df lengths differ");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (df_[i] < 1 || df_[i] > total_documents_) {
        throw ValidationError("vocabulary term '" + terms_[i] +
                              "' has df outside [1, total_documents]");
      }
      if (!index_.emplace(terms_[i], i).second) {
        throw ValidationError("vocabulary repeats term '" + terms_[i] + "'");
      }
    }
  }

  std::size_t size() const { return terms_.size(); }
  std::size_t total_documents() const { return total_documents_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::size_t>& document_frequency() const { return df_; }

  std::ptrdiff_t find(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  // Smoothed idf, strictly positive.
  double idf(std::size_t index) const {
    return std::log((1.0 + static_cast<double>(total_documents_)) /
                    (1.0 + static_cast<double>(df_[index]))) +
           1.0;
  }

  // FNV-1a over the serialized content; ties a model to its vocabulary.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    const auto mix = [&h](std::string_view bytes) {
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    mix(std::to_string(total_documents_));
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      mix(std::string_view("\x1f", 1));
      mix(terms_[i]);
      mix(std::string_view("\x1e", 1));
      mix(std::to_string(df_[i]));
    }
    return h;
  }

  bool operator==(const Vocabulary& o) const {
    return terms_ == o.terms_ && df_ == o.df_ &&
           total_documents_ == o.total_documents_;
  }

  nlohmann::json to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      terms.push_back({{"term", terms_[i]}, {"df", df_[i]}});
    }
    return {{"total_documents", total_documents_}, {"terms", terms}};
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    try {
      std::vector<std::string> terms;
      std::vector<std::size_t> df;
      for (const auto& t : j.at("terms")) {
        terms.push_back(t.at("term").get<std::string>());
        df.push_back(t.at("df").get<std::size_t>());
      }
      return Vocabulary(std::move(terms), std::move(df),
                        j.at("total_documents").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed vocabulary: ") + e.what());
    }
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t total_documents_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

// Each document is a list of terms (typically n-grams). Terms are kept when
// they occur in at least min_df documents; order is lexicographic.
inline Vocabulary fit_tfidf(std::span<const std::vector<std::string>> corpus,
                            std::size_t min_df = 2) {
  if (corpus.empty()) throw ValidationError("fit_tfidf: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::unordered_set<std::string_view> seen;
    for (const auto& term : doc) {
      if (seen.insert(term).second) ++df[term];
    }
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> counts;
  for (auto& [term, count] : df) {
    if (count >= min_df) {
      terms.push_back(term);
      counts.push_back(count);
    }
  }
  return Vocabulary(std::move(terms), std::move(counts), corpus.size());
}

// weight_t = tf_t * idf_t, then L2-normalized. Unknown terms are dropped.
inline FeatureVector transform_tfidf(std::span<const std::string> doc,
                                     const Vocabulary& vocab) {
  std::map<std::size_t, double> tf;
  for (const auto& term : doc) {
    const auto idx = vocab.find(term);
    if (idx >= 0) tf[static_cast<std::size_t>(idx)] += 1.0;
  }
  FeatureVector fv;
  fv.entries.reserve(tf.size());
  double sq = 0.0;
  for (const auto& [idx, count] : tf) {
    const double w = count * vocab.idf(idx);
    fv.entries.emplace_back(idx, w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [_, w] : fv.entries) w *= inv;
  }
  return fv;
}

// Text to TF-IDF vector with the same tokenization used at fit time.
struct Featurizer {
  std::vector<int> orders{1, 2, 3};

  std::vector<std::string> terms(std::string_view text) const {
    const auto tokens = word_tokenize(text);
    return ngrams(tokens, orders);
  }
  FeatureVector operator()(std::string_view text, const Vocabulary& vocab) const {
    const auto t = terms(text);
    return transform_tfidf(t, vocab);
  }
};

class WordPieceVocab {
 public:
  static constexpr std::string_view kUnknown = "[UNK]";

  explicit WordPieceVocab(std::span<const std::string> units) {
    for (const auto& u : units) {
      if (u.empty()) continue;
      if (!units_.insert(u).second) {
        throw ValidationError("WordPiece vocabulary repeats unit '" + u + "'");
      }
    }
    if (!units_.contains(std::string(kUnknown))) {
      throw ValidationError("WordPiece vocabulary lacks [UNK]");
    }
  }

  // One unit per line, as in a BERT vocab.txt.
  static WordPieceVocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open WordPiece vocabulary " + path);
    std::vector<std::string> units;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      units.push_back(line);
    }
    return WordPieceVocab(units);
  }

  bool contains(const std::string& unit) const { return units_.contains(unit); }
  std::size_t size() const { return units_.size(); }

 private:
  std::unordered_set<std::string> units_;
};

// Greedy longest-match-first. Continuation units carry a "##" prefix; if any
// position has no matching prefix the whole word becomes [UNK].
inline std::vector<std::string> wordpiece_tokenize(std::string_view word,
                                                   const WordPieceVocab& vocab) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (end > start) {
      std::string candidate(word.substr(start, end - start));
      if (start > 0) candidate.insert(0, "##");
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) return {std::string(WordPieceVocab::kUnknown)};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

}  // namespace pathtriage
