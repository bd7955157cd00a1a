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

#include "mmseq/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace mmseq {
namespace {

constexpr const char* kCheckpointFormat = "mmseq-tabular-v1";

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

double log_sum_exp(std::span<const double> row) {
  const double hi = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - hi);
  return hi + std::log(s);
}

}  // namespace

std::size_t SequenceHash::operator()(const Sequence& s) const {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ s.ids.size();
  for (TokenId id : s.ids) h = splitmix64(h ^ static_cast<std::uint64_t>(id));
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary({std::string(kEosToken)}, 0) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
  require(eos_id_ >= 0 && static_cast<std::size_t>(eos_id_) < tokens_.size(),
          ErrorCode::kInvalidArgument, "vocabulary eos id out of range");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    require(!t.empty() && !has_space(t), ErrorCode::kInvalidArgument,
            "vocabulary token must be non-empty and contain no whitespace");
    const bool inserted = index_.emplace(t, static_cast<TokenId>(i)).second;
    require(inserted, ErrorCode::kInvalidArgument, "duplicate vocabulary token '" + t + "'");
  }
}

Vocabulary Vocabulary::with_eos(const std::vector<std::string>& content) {
  std::vector<std::string> tokens;
  tokens.reserve(content.size() + 1);
  tokens.emplace_back(kEosToken);
  tokens.insert(tokens.end(), content.begin(), content.end());
  return Vocabulary(std::move(tokens), 0);
}

const std::string& Vocabulary::token(TokenId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), ErrorCode::kInvalidToken,
          "token id " + std::to_string(id) + " out of vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto id = find(token)) return *id;
  require(!token.empty() && !has_space(token), ErrorCode::kInvalidArgument,
          "vocabulary token must be non-empty and contain no whitespace");
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

Sequence Vocabulary::encode(std::string_view text) const {
  Sequence seq;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    auto id = find(word);
    require(id.has_value(), ErrorCode::kInvalidToken, "unknown token '" + word + "'");
    require(*id != eos_id_, ErrorCode::kInvalidToken,
            "end marker may not appear inside a sequence");
    seq.ids.push_back(*id);
  }
  return seq;
}

std::string Vocabulary::decode(const Sequence& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (i) out += ' ';
    out += token(seq.ids[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TabularModel

TabularModel::TabularModel(Vocabulary source_vocab, Vocabulary target_vocab,
                           int context_order, int max_len)
    : source_vocab_(std::move(source_vocab)),
      target_vocab_(std::move(target_vocab)),
      context_order_(context_order),
      max_len_(max_len) {
  require(context_order_ >= 0 && context_order_ <= 8, ErrorCode::kInvalidArgument,
          "context_order must be in [0, 8]");
  require(max_len_ >= 0, ErrorCode::kInvalidArgument, "max_len must be non-negative");
  require(target_vocab_.size() >= 1, ErrorCode::kInvalidArgument, "empty target vocabulary");
  context_count_ = 1;
  for (int i = 0; i < context_order_; ++i) {
    context_count_ *= target_vocab_.size();
    require(context_count_ <= (std::size_t{1} << 24), ErrorCode::kInvalidArgument,
            "context table too large");
  }
  const std::size_t n = row_count() * row_width();
  require(n <= (std::size_t{1} << 28), ErrorCode::kInvalidArgument, "logit table too large");
  logits_.assign(n, 0.0);
}

TabularModel TabularModel::random(Vocabulary source_vocab, Vocabulary target_vocab,
                                  int context_order, int max_len, double scale,
                                  std::uint64_t seed) {
  TabularModel model(std::move(source_vocab), std::move(target_vocab), context_order,
                     max_len);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : model.logits_) v = normal(rng);
  return model;
}

std::size_t TabularModel::anchor_at(const Sequence& x, std::size_t position) const {
  if (x.empty()) return null_anchor();
  const std::size_t i = std::min(position, x.size() - 1);
  return static_cast<std::size_t>(x.ids[i]);
}

std::size_t TabularModel::row_index(std::size_t anchor, std::span<const TokenId> prefix) const {
  const std::size_t width = row_width();
  const auto pad = static_cast<std::size_t>(target_vocab_.eos_id());
  std::size_t code = 0;
  for (int i = 1; i <= context_order_; ++i) {
    const std::size_t sym = prefix.size() >= static_cast<std::size_t>(i)
                                ? static_cast<std::size_t>(prefix[prefix.size() - i])
                                : pad;
    code = code * width + sym;
  }
  return anchor * context_count_ + code;
}

std::size_t TabularModel::row_for(const Sequence& x, std::span<const TokenId> prefix) const {
  return row_index(anchor_at(x, prefix.size()), prefix);
}

std::span<const double> TabularModel::row_logits(std::size_t row) const {
  return std::span<const double>(logits_).subspan(row * row_width(), row_width());
}

std::span<double> TabularModel::row_logits(std::size_t row) {
  return std::span<double>(logits_).subspan(row * row_width(), row_width());
}

void TabularModel::row_distribution(std::size_t row, std::span<double> probs) const {
  auto lg = row_logits(row);
  const double hi = *std::max_element(lg.begin(), lg.end());
  double total = 0.0;
  for (std::size_t v = 0; v < lg.size(); ++v) {
    probs[v] = std::exp(lg[v] - hi);
    total += probs[v];
  }
  for (std::size_t v = 0; v < lg.size(); ++v) probs[v] /= total;
}

void TabularModel::row_log_distribution(std::size_t row, std::span<double> log_probs) const {
  auto lg = row_logits(row);
  const double lse = log_sum_exp(lg);
  for (std::size_t v = 0; v < lg.size(); ++v) log_probs[v] = lg[v] - lse;
}

void TabularModel::validate_source(const Sequence& x) const {
  for (TokenId id : x.ids)
    require(source_vocab_.is_content(id), ErrorCode::kInvalidToken,
            "source token id " + std::to_string(id) + " is not a valid content token");
}

void TabularModel::validate_target(const Sequence& y) const {
  require(y.size() <= static_cast<std::size_t>(max_len_), ErrorCode::kInvalidSequence,
          "target length " + std::to_string(y.size()) + " exceeds max_len " +
              std::to_string(max_len_));
  for (TokenId id : y.ids)
    require(target_vocab_.is_content(id), ErrorCode::kInvalidToken,
            "target token id " + std::to_string(id) + " is not a valid content token");
}

// ---------------------------------------------------------------------------
// Operations

double log_prob(const TabularModel& model, const Sequence& x, const Sequence& y) {
  model.validate_source(x);
  model.validate_target(y);
  std::vector<double> lp(model.row_width());
  const std::span<const TokenId> ys(y.ids);
  const auto eos = model.target_vocab().eos_id();
  const std::size_t steps = std::min(y.size() + 1, static_cast<std::size_t>(model.max_len()));
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    model.row_log_distribution(model.row_for(x, ys.first(t)), lp);
    const TokenId emitted = t < y.size() ? y.ids[t] : eos;
    total += lp[static_cast<std::size_t>(emitted)];
  }
  return total;
}

void accumulate_grad_log_prob(const TabularModel& model, const Sequence& x,
                              const Sequence& y, double weight, std::span<double> grad) {
  require(grad.size() == model.parameter_count(), ErrorCode::kShapeMismatch,
          "gradient buffer does not match parameter count");
  model.validate_source(x);
  model.validate_target(y);
  const std::size_t width = model.row_width();
  std::vector<double> p(width);
  const std::span<const TokenId> ys(y.ids);
  const auto eos = model.target_vocab().eos_id();
  // The forced end marker at position max_len has no parameters.
  const std::size_t steps = std::min(y.size() + 1, static_cast<std::size_t>(model.max_len()));
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t row = model.row_for(x, ys.first(t));
    model.row_distribution(row, p);
    const auto emitted = static_cast<std::size_t>(t < y.size() ? y.ids[t] : eos);
    double* g = grad.data() + row * width;
    for (std::size_t v = 0; v < width; ++v)
      g[v] += weight * ((v == emitted ? 1.0 : 0.0) - p[v]);
  }
}

GradientVector grad_log_prob(const TabularModel& model, const Sequence& x, const Sequence& y) {
  GradientVector g(model.parameter_count());
  accumulate_grad_log_prob(model, x, y, 1.0, g.span());
  return g;
}

Sequence sample(const TabularModel& model, const Sequence& x, Rng& rng) {
  model.validate_source(x);
  const std::size_t width = model.row_width();
  const auto eos = static_cast<std::size_t>(model.target_vocab().eos_id());
  std::vector<double> p(width);
  Sequence y;
  while (y.size() < static_cast<std::size_t>(model.max_len())) {
    model.row_distribution(model.row_for(x, y.ids), p);
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = width;
    std::size_t last_positive = eos;
    for (std::size_t v = 0; v < width; ++v) {
      if (p[v] > 0.0) last_positive = v;
      cum += p[v];
      if (u < cum) {
        pick = v;
        break;
      }
    }
    // Rounding can leave cum slightly below 1.
    if (pick == width) pick = last_positive;
    if (pick == eos) break;
    y.ids.push_back(static_cast<TokenId>(pick));
  }
  return y;
}

Sequence greedy_decode(const TabularModel& model, const Sequence& x) {
  model.validate_source(x);
  const auto eos = model.target_vocab().eos_id();
  Sequence y;
  while (y.size() < static_cast<std::size_t>(model.max_len())) {
    auto lg = model.row_logits(model.row_for(x, y.ids));
    const auto best = static_cast<TokenId>(std::max_element(lg.begin(), lg.end()) - lg.begin());
    if (best == eos) break;
    y.ids.push_back(best);
  }
  return y;
}

std::uint64_t support_size(const TabularModel& model) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t c = model.target_vocab().content_size();
  std::uint64_t total = 0;
  std::uint64_t level = 1;
  for (int len = 0; len <= model.max_len(); ++len) {
    if (total > kMax - level) return kMax;
    total += level;
    if (c != 0 && level > kMax / c) {
      if (len < model.max_len()) return kMax;
    } else {
      level *= c;
    }
  }
  return total;
}

std::vector<SupportEntry> enumerate_support(const TabularModel& model, const Sequence& x,
                                            std::uint64_t cap) {
  model.validate_source(x);
  const std::uint64_t n = support_size(model);
  require(n <= cap, ErrorCode::kEnumerationTooLarge,
          "support has " + std::to_string(n) + " sequences, above the enumeration cap " +
              std::to_string(cap));
  std::vector<SupportEntry> out;
  out.reserve(static_cast<std::size_t>(n));
  const std::size_t width = model.row_width();
  const auto eos = static_cast<std::size_t>(model.target_vocab().eos_id());
  const auto max_len = static_cast<std::size_t>(model.max_len());
  Sequence prefix;

  // Accumulates log-probability terms in the same order as log_prob so that
  // the two agree bit-for-bit.
  std::function<void(double)> visit = [&](double lp_prefix) {
    if (prefix.size() == max_len) {
      out.push_back({prefix, lp_prefix, std::exp(lp_prefix)});
      return;
    }
    std::vector<double> lp(width);
    model.row_log_distribution(model.row_for(x, prefix.ids), lp);
    const double lp_end = lp_prefix + lp[eos];
    out.push_back({prefix, lp_end, std::exp(lp_end)});
    for (std::size_t v = 0; v < width; ++v) {
      if (v == eos) continue;
      prefix.ids.push_back(static_cast<TokenId>(v));
      visit(lp_prefix + lp[v]);
      prefix.ids.pop_back();
    }
  };
  visit(0.0);
  return out;
}

void apply_update(TabularModel& model, const GradientVector& grad, double lr) {
  require(grad.size() == model.parameter_count(), ErrorCode::kShapeMismatch,
          "gradient has " + std::to_string(grad.size()) + " entries, model has " +
              std::to_string(model.parameter_count()));
  require(std::isfinite(lr), ErrorCode::kInvalidArgument, "learning rate must be finite");
  auto logits = model.logits();
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += lr * grad[i];
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const TabularModel& model, std::ostream& out) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["source_vocab"] = model.source_vocab().tokens();
  j["source_eos"] = model.source_vocab().eos_id();
  j["target_vocab"] = model.target_vocab().tokens();
  j["target_eos"] = model.target_vocab().eos_id();
  j["context_order"] = model.context_order();
  j["max_len"] = model.max_len();
  j["rows"] = model.row_count();
  j["row_width"] = model.row_width();
  j["logits"] = std::vector<double>(model.logits().begin(), model.logits().end());
  out << j.dump(1) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIo, "failed to write checkpoint");
}

TabularModel load_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    require(j.at("format").get<std::string>() == kCheckpointFormat, ErrorCode::kParse,
            "unsupported checkpoint format");
    TabularModel model(
        Vocabulary(j.at("source_vocab").get<std::vector<std::string>>(),
                   j.at("source_eos").get<TokenId>()),
        Vocabulary(j.at("target_vocab").get<std::vector<std::string>>(),
                   j.at("target_eos").get<TokenId>()),
        j.at("context_order").get<int>(), j.at("max_len").get<int>());
    const auto logits = j.at("logits").get<std::vector<double>>();
    require(logits.size() == model.parameter_count() &&
                j.at("rows").get<std::size_t>() == model.row_count() &&
                j.at("row_width").get<std::size_t>() == model.row_width(),
            ErrorCode::kParse, "checkpoint dimensions do not match its vocabularies");
    for (double v : logits)
      require(std::isfinite(v), ErrorCode::kParse, "checkpoint contains a non-finite logit");
    std::copy(logits.begin(), logits.end(), model.logits().begin());
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace mmseq
