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

#include "mmseq/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mmseq {
namespace {

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Sequence encode_growing(Vocabulary& vocab, const std::string& line) {
  Sequence seq;
  std::istringstream in(line);
  for (std::string word; in >> word;) {
    require(word != kEosToken, ErrorCode::kInvalidToken,
            "end marker may not appear in corpus text");
    seq.ids.push_back(vocab.add(word));
  }
  return seq;
}

ParallelCorpus load_impl(std::istream& source_lines, std::istream& target_lines,
                         Vocabulary source_vocab, Vocabulary target_vocab, bool grow) {
  const auto src = read_lines(source_lines);
  const auto tgt = read_lines(target_lines);
  require(!src.empty() && !tgt.empty(), ErrorCode::kParse, "parallel corpus file is empty");
  require(src.size() == tgt.size(), ErrorCode::kParse,
          "line-count mismatch: " + std::to_string(src.size()) + " source lines vs " +
              std::to_string(tgt.size()) + " target lines");
  ParallelCorpus corpus;
  corpus.source_vocab = std::move(source_vocab);
  corpus.target_vocab = std::move(target_vocab);
  for (std::size_t i = 0; i < src.size(); ++i) {
    Sequence x = grow ? encode_growing(corpus.source_vocab, src[i])
                      : corpus.source_vocab.encode(src[i]);
    Sequence y = grow ? encode_growing(corpus.target_vocab, tgt[i])
                      : corpus.target_vocab.encode(tgt[i]);
    if (!corpus.examples.empty() && corpus.examples.back().source == x) {
      corpus.examples.back().references.push_back(std::move(y));
    } else {
      corpus.examples.push_back({std::move(x), {std::move(y)}});
    }
  }
  return corpus;
}

}  // namespace

std::size_t ParallelCorpus::pair_count() const {
  std::size_t n = 0;
  for (const auto& ex : examples) n += ex.references.size();
  return n;
}

ParallelCorpus load_parallel_corpus(std::istream& source_lines, std::istream& target_lines) {
  return load_impl(source_lines, target_lines, Vocabulary(), Vocabulary(), true);
}

ParallelCorpus load_parallel_corpus(std::istream& source_lines, std::istream& target_lines,
                                    const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab) {
  return load_impl(source_lines, target_lines, source_vocab, target_vocab, false);
}

void write_parallel_corpus(const ParallelCorpus& corpus, std::ostream& source_lines,
                           std::ostream& target_lines) {
  for (const auto& ex : corpus.examples) {
    const std::string src = corpus.source_vocab.decode(ex.source);
    for (const auto& y : ex.references) {
      source_lines << src << '\n';
      target_lines << corpus.target_vocab.decode(y) << '\n';
    }
  }
}

std::string synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kCopy: return "copy";
    case SyntheticKind::kTokenMap: return "token_map";
    case SyntheticKind::kLengthControl: return "length_control";
  }
  return "unknown";
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  for (auto k : {SyntheticKind::kCopy, SyntheticKind::kTokenMap, SyntheticKind::kLengthControl})
    if (synthetic_kind_name(k) == name) return k;
  fail(ErrorCode::kInvalidArgument, "unknown synthetic task '" + name + "'");
}

void SyntheticTaskSpec::validate() const {
  require(source_vocab_size >= 1 && target_vocab_size >= 1, ErrorCode::kInvalidArgument,
          "synthetic vocabularies need at least one token");
  require(min_length >= 1 && min_length <= max_length, ErrorCode::kInvalidArgument,
          "synthetic source length range must satisfy 1 <= min <= max");
  require(size >= 1, ErrorCode::kInvalidArgument, "synthetic corpus size must be positive");
  require(max_len >= 1, ErrorCode::kInvalidArgument, "synthetic max_len must be positive");
  require(source_tokens.empty() || source_tokens.size() == static_cast<std::size_t>(source_vocab_size),
          ErrorCode::kInvalidArgument, "source_tokens size differs from source_vocab_size");
  require(target_tokens.empty() || target_tokens.size() == static_cast<std::size_t>(target_vocab_size),
          ErrorCode::kInvalidArgument, "target_tokens size differs from target_vocab_size");
  switch (kind) {
    case SyntheticKind::kCopy:
      require(source_vocab_size == target_vocab_size, ErrorCode::kInvalidArgument,
              "copy task needs equal vocabulary sizes");
      require(max_length <= max_len, ErrorCode::kInvalidArgument,
              "copy targets would exceed max_len");
      break;
    case SyntheticKind::kTokenMap:
      require(max_length <= max_len, ErrorCode::kInvalidArgument,
              "token_map targets would exceed max_len");
      if (mapping.empty()) {
        require(source_vocab_size <= target_vocab_size, ErrorCode::kInvalidArgument,
                "identity token map needs target_vocab_size >= source_vocab_size");
      } else {
        require(mapping.size() == static_cast<std::size_t>(source_vocab_size),
                ErrorCode::kInvalidArgument, "token map must cover every source token");
        for (int m : mapping)
          require(m >= 0 && m < target_vocab_size, ErrorCode::kInvalidArgument,
                  "token map target out of range");
      }
      break;
    case SyntheticKind::kLengthControl:
      require(ratio > 0.0 && std::isfinite(ratio), ErrorCode::kInvalidArgument,
              "length ratio must be positive");
      require(std::ceil(ratio * max_length) <= max_len, ErrorCode::kInvalidArgument,
              "length_control targets would exceed max_len");
      break;
  }
}

Vocabulary SyntheticTaskSpec::source_vocab() const {
  if (!source_tokens.empty()) return Vocabulary::with_eos(source_tokens);
  std::vector<std::string> names;
  const char* prefix = kind == SyntheticKind::kCopy ? "w" : "s";
  for (int i = 0; i < source_vocab_size; ++i) names.push_back(prefix + std::to_string(i));
  return Vocabulary::with_eos(names);
}

Vocabulary SyntheticTaskSpec::target_vocab() const {
  if (!target_tokens.empty()) return Vocabulary::with_eos(target_tokens);
  if (kind == SyntheticKind::kCopy) return source_vocab();
  std::vector<std::string> names;
  for (int i = 0; i < target_vocab_size; ++i) names.push_back("t" + std::to_string(i));
  return Vocabulary::with_eos(names);
}

// Content token k sits at id k + 1 in both vocabularies (end marker at 0).
Sequence synthesize_target(const SyntheticTaskSpec& spec, const Sequence& source) {
  Sequence y;
  switch (spec.kind) {
    case SyntheticKind::kCopy:
      y = source;
      break;
    case SyntheticKind::kTokenMap:
      for (TokenId id : source.ids) {
        const int k = id - 1;
        const int m = spec.mapping.empty() ? k : spec.mapping[static_cast<std::size_t>(k)];
        y.ids.push_back(static_cast<TokenId>(m + 1));
      }
      break;
    case SyntheticKind::kLengthControl: {
      const auto len = static_cast<std::size_t>(
          std::ceil(spec.ratio * static_cast<double>(source.size())));
      for (std::size_t t = 0; t < len; ++t)
        y.ids.push_back(static_cast<TokenId>(t % static_cast<std::size_t>(spec.target_vocab_size) + 1));
      break;
    }
  }
  return y;
}

ParallelCorpus generate_synthetic(const SyntheticTaskSpec& spec) {
  spec.validate();
  ParallelCorpus corpus;
  corpus.source_vocab = spec.source_vocab();
  corpus.target_vocab = spec.target_vocab();
  Rng rng(spec.seed);
  std::uniform_int_distribution<int> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<int> token(1, spec.source_vocab_size);
  corpus.examples.reserve(static_cast<std::size_t>(spec.size));
  for (int i = 0; i < spec.size; ++i) {
    Sequence x;
    const int n = length(rng);
    for (int t = 0; t < n; ++t) x.ids.push_back(static_cast<TokenId>(token(rng)));
    Sequence y = synthesize_target(spec, x);
    corpus.examples.push_back({std::move(x), {std::move(y)}});
  }
  return corpus;
}

LexDictionary synthetic_lexicon(const SyntheticTaskSpec& spec) {
  require(spec.kind == SyntheticKind::kTokenMap, ErrorCode::kInvalidArgument,
          "synthetic lexicon needs a token_map task");
  spec.validate();
  const Vocabulary src = spec.source_vocab();
  const Vocabulary tgt = spec.target_vocab();
  std::vector<LexEntry> entries;
  for (int k = 0; k < spec.source_vocab_size; ++k) {
    const int m = spec.mapping.empty() ? k : spec.mapping[static_cast<std::size_t>(k)];
    entries.push_back({src.token(k + 1), tgt.token(m + 1), 1.0});
  }
  return LexDictionary(std::move(entries), 0.5);
}

BatchIterator::BatchIterator(std::size_t corpus_size, std::size_t batch_size,
                             std::uint64_t seed)
    : corpus_size_(corpus_size), batch_size_(batch_size), rng_(seed), order_(corpus_size) {
  require(batch_size_ >= 1, ErrorCode::kInvalidArgument, "batch size must be positive");
  require(corpus_size_ >= 1, ErrorCode::kInvalidArgument, "cannot batch an empty corpus");
  reshuffle();
}

void BatchIterator::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
  if (cursor_ == corpus_size_) {
    reshuffle();
    ++epoch_;
  }
  const std::size_t end = std::min(corpus_size_, cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t corpus_size,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed) {
  BatchIterator it(corpus_size, batch_size, seed);
  std::vector<std::vector<std::size_t>> out;
  std::size_t seen = 0;
  while (seen < corpus_size) {
    out.push_back(it.next());
    seen += out.back().size();
  }
  return out;
}

std::vector<Example> gather(const ParallelCorpus& corpus, const std::vector<std::size_t>& ids) {
  std::vector<Example> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) {
    require(i < corpus.size(), ErrorCode::kInvalidArgument,
            "example index " + std::to_string(i) + " out of range");
    out.push_back(corpus.examples[i]);
  }
  return out;
}

}  // namespace mmseq
