// Copyright 2026 The mmseq Authors
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

// Independent reference computations for the tests. Nothing here calls the
// library's probability, enumeration or gradient code; the row layout is
// re-derived from its documented definition.

#ifndef MMSEQ_TESTS_ORACLES_HPP_
#define MMSEQ_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmseq/data.hpp"
#include "mmseq/estimators.hpp"
#include "mmseq/features.hpp"
#include "mmseq/seqmodel.hpp"

namespace oracle {

using mmseq::Sequence;
using mmseq::TabularModel;
using mmseq::TokenId;

using Vec = std::vector<double>;
using PhiFn = std::function<Vec(const Sequence& x, const Sequence& y)>;

inline Vec softmax(std::span<const double> z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  Vec p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += p[i] = std::exp(z[i] - m);
  for (double& v : p) v /= total;
  return p;
}

// Row of the logit table used after `prefix` has been emitted for source x:
// anchor = x[min(t, |x| - 1)] (or the null anchor for empty x); context digits
// are the last k targets, most recent first, padded with the end marker.
inline std::size_t row(const TabularModel& m, const Sequence& x, const std::vector<TokenId>& prefix) {
  const std::size_t V = m.target_vocab().size();
  const std::size_t t = prefix.size();
  const std::size_t anchor = x.ids.empty() ? m.source_vocab().size()
                                           : static_cast<std::size_t>(x.ids[std::min(t, x.ids.size() - 1)]);
  std::size_t contexts = 1;
  for (int i = 0; i < m.context_order(); ++i) contexts *= V;
  std::size_t code = 0;
  for (int i = 1; i <= m.context_order(); ++i) {
    const std::size_t sym = t >= static_cast<std::size_t>(i)
                                ? static_cast<std::size_t>(prefix[t - i])
                                : static_cast<std::size_t>(m.target_vocab().eos_id());
    code = code * V + sym;
  }
  return anchor * contexts + code;
}

inline Vec row_probs(const TabularModel& m, std::size_t r) {
  const std::size_t V = m.target_vocab().size();
  return softmax(m.logits().subspan(r * V, V));
}

// Product of per-step probabilities, end marker forced at max_len.
inline double prob(const TabularModel& m, const Sequence& x, const Sequence& y) {
  const auto eos = static_cast<std::size_t>(m.target_vocab().eos_id());
  double p = 1.0;
  std::vector<TokenId> prefix;
  for (std::size_t t = 0; t <= y.ids.size(); ++t) {
    if (t == static_cast<std::size_t>(m.max_len())) break;
    const Vec probs = row_probs(m, row(m, x, prefix));
    p *= t < y.ids.size() ? probs[static_cast<std::size_t>(y.ids[t])] : probs[eos];
    if (t < y.ids.size()) prefix.push_back(y.ids[t]);
  }
  return p;
}

// Every sequence of length 0..max_len over content ids 1..content (the end
// marker is id 0 in the test vocabularies).
inline std::vector<Sequence> all_sequences(int content, int max_len) {
  std::vector<Sequence> out{Sequence{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<TokenId> digits(static_cast<std::size_t>(len), 1);
    while (true) {
      out.push_back(Sequence{digits});
      int i = len - 1;
      while (i >= 0 && digits[static_cast<std::size_t>(i)] == content) {
        digits[static_cast<std::size_t>(i)] = 1;
        --i;
      }
      if (i < 0) break;
      ++digits[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

inline std::vector<Sequence> support(const TabularModel& m) {
  return all_sequences(static_cast<int>(m.target_vocab().content_size()), m.max_len());
}

inline Vec model_average(const TabularModel& m, const PhiFn& phi, const Sequence& x) {
  Vec avg;
  for (const Sequence& y : support(m)) {
    const double p = prob(m, x, y);
    const Vec f = phi(x, y);
    if (avg.empty()) avg.assign(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) avg[i] += p * f[i];
  }
  return avg;
}

inline Vec empirical_average(const PhiFn& phi, const mmseq::Example& ex) {
  Vec avg;
  for (const Sequence& r : ex.references) {
    const Vec f = phi(ex.source, r);
    if (avg.empty()) avg.assign(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) avg[i] += f[i] / static_cast<double>(ex.references.size());
  }
  return avg;
}

inline double mm_loss(const TabularModel& m, const PhiFn& phi, const std::vector<mmseq::Example>& batch) {
  double total = 0.0;
  for (const auto& ex : batch) {
    const Vec a = model_average(m, phi, ex.source);
    const Vec b = empirical_average(phi, ex);
    for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return total / static_cast<double>(batch.size());
}

inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec params, double h) {
  Vec g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f(params);
    params[i] = keep - h;
    const double down = f(params);
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Evaluates f on a copy of the model whose logits are replaced by params.
inline std::function<double(const Vec&)> with_params(const TabularModel& m,
                                                     std::function<double(const TabularModel&)> f) {
  return [m, f](const Vec& params) {
    TabularModel probe = m;
    std::copy(params.begin(), params.end(), probe.logits().begin());
    return f(probe);
  };
}

inline Vec params_of(const TabularModel& m) { return Vec(m.logits().begin(), m.logits().end()); }

inline double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale == 0.0 ? worst : worst / scale;
}

// Closed-form length ratio, written from its definition.
inline double length_ratio(double x_len, double y_len, double beta) {
  if (y_len == 0.0) return 0.0;
  const double a = beta * x_len;
  return a < y_len ? a / y_len : y_len / a;
}

}  // namespace oracle

namespace testing {

using mmseq::Sequence;
using mmseq::TabularModel;
using mmseq::Vocabulary;

inline Vocabulary names(const std::string& prefix, int n) {
  std::vector<std::string> tokens;
  for (int i = 0; i < n; ++i) tokens.push_back(prefix + std::to_string(i));
  return Vocabulary::with_eos(tokens);
}

inline Sequence seq(std::initializer_list<int> ids) {
  Sequence s;
  for (int i : ids) s.ids.push_back(i);
  return s;
}

inline TabularModel random_model(int src, int tgt, int max_len, std::uint64_t seed,
                                 double scale = 1.0, int order = 1) {
  return TabularModel::random(names("s", src), names("t", tgt), order, max_len, scale, seed);
}

// Every row puts `margin` on the token y* emits from that row, or on the end
// marker for rows y* never visits.
inline TabularModel deterministic_model(int src, int tgt, int max_len, const Sequence& x,
                                        const Sequence& y_star, double margin = 30.0,
                                        int order = 1) {
  TabularModel m(names("s", src), names("t", tgt), order, max_len);
  for (std::size_t r = 0; r < m.row_count(); ++r) m.row_logits(r)[0] = margin;
  std::vector<mmseq::TokenId> prefix;
  for (std::size_t t = 0; t <= y_star.ids.size() && t < static_cast<std::size_t>(max_len); ++t) {
    const auto r = oracle::row(m, x, prefix);
    auto logits = m.row_logits(r);
    std::fill(logits.begin(), logits.end(), 0.0);
    const auto next = t < y_star.ids.size() ? y_star.ids[t] : 0;
    logits[static_cast<std::size_t>(next)] = margin;
    if (t < y_star.ids.size()) prefix.push_back(y_star.ids[t]);
  }
  return m;
}

inline Sequence random_sequence(std::mt19937_64& g, int vocab, int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len), tok(1, vocab);
  Sequence s;
  for (int n = len(g); n > 0; --n) s.ids.push_back(tok(g));
  return s;
}

// Feature returning fixed vectors for listed sequences and zeros otherwise.
class TableFeature final : public mmseq::FeatureFunction {
 public:
  TableFeature(std::size_t dim, std::vector<std::pair<Sequence, std::vector<double>>> table)
      : dim_(dim), table_(std::move(table)) {}
  std::size_t dimension() const override { return dim_; }
  void evaluate(const Sequence&, const Sequence& y, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& [s, v] : table_)
      if (s == y) std::copy(v.begin(), v.end(), out.begin());
  }
  std::string name() const override { return "table"; }

 private:
  std::size_t dim_;
  std::vector<std::pair<Sequence, std::vector<double>>> table_;
};

}  // namespace testing

#endif  // MMSEQ_TESTS_ORACLES_HPP_
