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

// Synthetic multilabel report generator with a planted vocabulary: each label
// owns a few keywords that appear in the text of its positive cases, mixed
// into random background words. Used for demos and end-to-end tests.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathtriage/corpus.hpp"
#include "pathtriage/random.hpp"

namespace pathtriage {

struct SyntheticSpec {
  std::size_t cases = 5000;
  // Positive rate per label; the label count is its size.
  std::vector<double> label_rates{0.30, 0.25, 0.20, 0.15, 0.10, 0.08};
  std::size_t keywords_per_label = 4;
  std::size_t background_vocabulary = 400;
  std::size_t min_words = 12;
  std::size_t max_words = 30;
  // Probability that a positive case mentions none of its label's keywords.
  double silent_positive = 0.0;
  // Probability, per case and negative label, of a stray keyword mention.
  double stray_keyword = 0.01;
  // Probability, per case and label, that the gold bit is flipped after the
  // text was written (annotation noise).
  double label_noise = 0.0;
  std::uint64_t seed = 2024;
  std::string task = "synthetic";
};

struct SyntheticTask {
  TaskSchema schema;
  std::vector<LabeledCase> cases;
};

inline std::string synthetic_keyword(std::size_t label, std::size_t k) {
  return "kw" + std::to_string(label) + "x" + std::to_string(k);
}

inline SyntheticTask make_planted_task(const SyntheticSpec& spec) {
  const std::size_t n = spec.label_rates.size();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("label_" + std::to_string(i));
  SyntheticTask out{TaskSchema(spec.task, names), {}};
  Rng rng(spec.seed);
  const auto pick = [&](std::size_t bound) {
    return static_cast<std::size_t>(uniform_below(rng, bound));
  };

  for (std::size_t k = 0; k < spec.cases; ++k) {
    LabelBits gold(n, 0);
    for (std::size_t i = 0; i < n; ++i) gold[i] = uniform_unit(rng) < spec.label_rates[i];

    const std::size_t len =
        spec.min_words + pick(spec.max_words - spec.min_words + 1);
    std::vector<std::string> words;
    for (std::size_t w = 0; w < len; ++w) {
      words.push_back("w" + std::to_string(pick(spec.background_vocabulary)));
    }
    const auto insert = [&](std::string word) {
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pick(words.size() + 1)),
                   std::move(word));
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (gold[i]) {
        if (uniform_unit(rng) < spec.silent_positive) continue;
        const std::size_t mentions = 1 + pick(2);
        for (std::size_t m = 0; m < mentions; ++m) {
          insert(synthetic_keyword(i, pick(spec.keywords_per_label)));
        }
      } else if (uniform_unit(rng) < spec.stray_keyword) {
        insert(synthetic_keyword(i, pick(spec.keywords_per_label)));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform_unit(rng) < spec.label_noise) gold[i] = gold[i] ? 0 : 1;
    }

    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    text += '.';
    out.cases.push_back({"case-" + std::to_string(k), std::move(text), std::move(gold)});
  }
  return out;
}

// Hyperparameter grid used by the synthetic demo and its tests.
inline nlohmann::json synthetic_grid() {
  return {{{"loss", "logistic"}, {"learning_rate", 1.5}, {"epochs", 100}, {"l2", 0.0},
           {"batch_size", 16}},
          {{"loss", "logistic"}, {"learning_rate", 1.5}, {"epochs", 100}, {"l2", 1e-5},
           {"batch_size", 16}},
          {{"loss", "svm"}, {"learning_rate", 0.2}, {"epochs", 100}, {"l2", 0.0},
           {"batch_size", 16}}};
}

}  // namespace pathtriage
