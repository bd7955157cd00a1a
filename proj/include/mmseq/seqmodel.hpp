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

#ifndef MMSEQ_SEQMODEL_HPP_
#define MMSEQ_SEQMODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmseq/rng.hpp"
#include "mmseq/vector.hpp"

namespace mmseq {

using TokenId = std::int32_t;

inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::uint64_t kDefaultEnumerationCap = 1000000;

// Content tokens only; the end marker is implicit and never stored.
struct Sequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const Sequence&, const Sequence&) = default;
  friend auto operator<=>(const Sequence&, const Sequence&) = default;
};

struct SequenceHash {
  std::size_t operator()(const Sequence& s) const;
};

// A source sequence with one or more reference targets.
struct Example {
  Sequence source;
  std::vector<Sequence> references;
};

class Vocabulary {
 public:
  // Vocabulary holding only the end marker, at id 0.
  Vocabulary();
  Vocabulary(std::vector<std::string> tokens, TokenId eos_id);

  // End marker at id 0, followed by `content` in order.
  static Vocabulary with_eos(const std::vector<std::string>& content);

  std::size_t size() const { return tokens_.size(); }
  std::size_t content_size() const { return tokens_.size() - 1; }
  TokenId eos_id() const { return eos_id_; }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<TokenId> find(std::string_view token) const;
  bool is_content(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size() && id != eos_id_;
  }

  // Returns the existing id or appends a new token.
  TokenId add(std::string_view token);

  // Whitespace-tokenized text to ids; unknown tokens raise kInvalidToken.
  Sequence encode(std::string_view text) const;
  std::string decode(const Sequence& seq) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.eos_id_ == b.eos_id_;
  }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_id_ = 0;
  std::unordered_map<std::string, TokenId> index_;
};

// p(y | x) as a table of logits. The distribution of the token at target
// position t is a softmax over the row selected by
//   (source anchor, last `context_order` target tokens)
// where the anchor is x[min(t, |x|-1)], or a dedicated null anchor when x is
// empty. Positions before the start of y are padded with the end-marker id.
// At position max_len the end marker is emitted with probability 1, so the
// support is every sequence of length 0..max_len.
class TabularModel {
 public:
  TabularModel(Vocabulary source_vocab, Vocabulary target_vocab, int context_order,
               int max_len);

  // Logits drawn i.i.d. from N(0, scale^2).
  static TabularModel random(Vocabulary source_vocab, Vocabulary target_vocab,
                             int context_order, int max_len, double scale,
                             std::uint64_t seed);

  const Vocabulary& source_vocab() const { return source_vocab_; }
  const Vocabulary& target_vocab() const { return target_vocab_; }
  int context_order() const { return context_order_; }
  int max_len() const { return max_len_; }

  std::size_t anchor_count() const { return source_vocab_.size() + 1; }
  std::size_t null_anchor() const { return source_vocab_.size(); }
  std::size_t context_count() const { return context_count_; }
  std::size_t row_count() const { return anchor_count() * context_count_; }
  std::size_t row_width() const { return target_vocab_.size(); }
  std::size_t parameter_count() const { return logits_.size(); }

  std::size_t anchor_at(const Sequence& x, std::size_t position) const;
  // Row governing the token at position prefix.size().
  std::size_t row_for(const Sequence& x, std::span<const TokenId> prefix) const;
  std::size_t row_index(std::size_t anchor, std::span<const TokenId> prefix) const;

  std::span<const double> row_logits(std::size_t row) const;
  std::span<double> row_logits(std::size_t row);
  void row_distribution(std::size_t row, std::span<double> probs) const;
  void row_log_distribution(std::size_t row, std::span<double> log_probs) const;

  std::span<const double> logits() const { return logits_; }
  std::span<double> logits() { return logits_; }

  // Throws kInvalidToken / kInvalidSequence.
  void validate_source(const Sequence& x) const;
  void validate_target(const Sequence& y) const;

  friend bool operator==(const TabularModel&, const TabularModel&) = default;

 private:
  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
  int context_order_;
  int max_len_;
  std::size_t context_count_;
  std::vector<double> logits_;
};

struct SupportEntry {
  Sequence sequence;
  double log_prob;
  double prob;
};

double log_prob(const TabularModel& model, const Sequence& x, const Sequence& y);

GradientVector grad_log_prob(const TabularModel& model, const Sequence& x,
                             const Sequence& y);

// grad += weight * grad_log_prob(model, x, y) without allocating.
void accumulate_grad_log_prob(const TabularModel& model, const Sequence& x,
                              const Sequence& y, double weight,
                              std::span<double> grad);

// Ancestral sampling at temperature 1.
Sequence sample(const TabularModel& model, const Sequence& x, Rng& rng);

// Argmax decoding; ties go to the lowest id.
Sequence greedy_decode(const TabularModel& model, const Sequence& x);

// Number of sequences of length 0..max_len, saturating at UINT64_MAX.
std::uint64_t support_size(const TabularModel& model);

std::vector<SupportEntry> enumerate_support(
    const TabularModel& model, const Sequence& x,
    std::uint64_t cap = kDefaultEnumerationCap);

// logits += lr * grad (ascent convention).
void apply_update(TabularModel& model, const GradientVector& grad, double lr);

// Structured-text checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const TabularModel& model, std::ostream& out);
TabularModel load_checkpoint(std::istream& in);

}  // namespace mmseq

#endif  // MMSEQ_SEQMODEL_HPP_
