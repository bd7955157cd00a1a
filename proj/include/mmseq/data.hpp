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

#ifndef MMSEQ_DATA_HPP_
#define MMSEQ_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmseq/features.hpp"
#include "mmseq/rng.hpp"
#include "mmseq/seqmodel.hpp"

namespace mmseq {

struct ParallelCorpus {
  std::vector<Example> examples;
  Vocabulary source_vocab;
  Vocabulary target_vocab;

  std::size_t size() const { return examples.size(); }
  std::size_t pair_count() const;
};

// One sequence per line on each side. Vocabularies grow in order of first
// occurrence unless fixed ones are supplied, in which case unknown tokens are
// an error. Consecutive identical source lines become one multi-reference
// example.
ParallelCorpus load_parallel_corpus(std::istream& source_lines, std::istream& target_lines);
ParallelCorpus load_parallel_corpus(std::istream& source_lines, std::istream& target_lines,
                                    const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab);

// Inverse of load_parallel_corpus: one line per (source, reference) pair.
void write_parallel_corpus(const ParallelCorpus& corpus, std::ostream& source_lines,
                           std::ostream& target_lines);

enum class SyntheticKind { kCopy, kTokenMap, kLengthControl };

std::string synthetic_kind_name(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(const std::string& name);

struct SyntheticTaskSpec {
  SyntheticKind kind = SyntheticKind::kLengthControl;
  int source_vocab_size = 5;
  int target_vocab_size = 5;
  int min_length = 1;  // source length range, inclusive
  int max_length = 4;
  int size = 100;
  int max_len = 8;  // target length limit
  // token_map: mapping[i] is the target index of source token i. Identity
  // when empty.
  std::vector<int> mapping;
  // length_control: |y| = ceil(ratio * |x|).
  double ratio = 2.0;
  std::uint64_t seed = 0;
  // Optional explicit token names; default "s0.."/"t0..", or shared names
  // for copy.
  std::vector<std::string> source_tokens;
  std::vector<std::string> target_tokens;

  void validate() const;
  Vocabulary source_vocab() const;
  Vocabulary target_vocab() const;
};

// Target for a source under the task rule. Ids refer to the task's vocabularies.
Sequence synthesize_target(const SyntheticTaskSpec& spec, const Sequence& source);

// `spec.size` examples with uniformly drawn source lengths and tokens.
ParallelCorpus generate_synthetic(const SyntheticTaskSpec& spec);

// Dictionary with one entry per token_map pair, probability 1.
LexDictionary synthetic_lexicon(const SyntheticTaskSpec& spec);

// Shuffled mini-batches of example indices. Each epoch visits every example
// once, ending with a short batch when the size does not divide evenly; a new
// permutation is drawn at every epoch boundary.
class BatchIterator {
 public:
  BatchIterator(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t epoch() const { return epoch_; }

 private:
  void reshuffle();

  std::size_t corpus_size_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

// All batches of one epoch.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t corpus_size,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed);

std::vector<Example> gather(const ParallelCorpus& corpus, const std::vector<std::size_t>& ids);

}  // namespace mmseq

#endif  // MMSEQ_DATA_HPP_
