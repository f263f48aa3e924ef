/*
 * Copyright 2026 The fsbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

#include "fsbias/metrics.hpp"
#include "fsbias/random.hpp"

namespace fsbias::testing {

// O(n^2) pair counting, ties at one half.
inline double auc_by_pairs(const std::vector<ScoredLabel>& s) {
  double hits = 0.0;
  double pairs = 0.0;
  for (const auto& p : s) {
    if (!p.positive) continue;
    for (const auto& n : s) {
      if (n.positive) continue;
      pairs += 1.0;
      hits += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
    }
  }
  return hits / pairs;
}

struct F1Oracle {
  std::vector<double> f1;
  double macro = 0.0;
  double weighted = 0.0;
  double accuracy = 0.0;
};

// Confusion-matrix arithmetic written out directly.
inline F1Oracle f1_by_confusion(const std::vector<std::string>& pred,
                                const std::vector<std::string>& gold,
                                const std::vector<std::string>& classes) {
  const std::size_t c = classes.size();
  std::vector<std::vector<double>> m(c, std::vector<double>(c, 0.0));
  auto idx = [&](const std::string& l) {
    for (std::size_t i = 0; i < c; ++i) {
      if (classes[i] == l) return i;
    }
    return c;
  };
  for (std::size_t i = 0; i < pred.size(); ++i) m[idx(gold[i])][idx(pred[i])] += 1;
  F1Oracle out;
  double correct = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row += m[k][j];
      col += m[j][k];
    }
    const double tp = m[k][k];
    correct += tp;
    const double p = col > 0 ? tp / col : 0.0;
    const double r = row > 0 ? tp / row : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    out.f1.push_back(f);
    out.macro += f / static_cast<double>(c);
    out.weighted += f * row / static_cast<double>(pred.size());
  }
  out.accuracy = correct / static_cast<double>(pred.size());
  return out;
}

// Up to 100 samples, both classes present, scores on a coarse grid.
inline std::vector<ScoredLabel> random_scored(Rng& rng) {
  const std::size_t n = 2 + rng.uniform_below(99);
  std::vector<ScoredLabel> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].score = static_cast<double>(rng.uniform_below(25)) / 24.0;
    s[i].positive = i == 0 ? true : (i == 1 ? false : rng.uniform_below(2) == 0);
  }
  return s;
}

}  // namespace fsbias::testing
