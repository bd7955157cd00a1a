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

#ifndef MMSEQ_FEATURES_HPP_
#define MMSEQ_FEATURES_HPP_

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmseq/seqmodel.hpp"

namespace mmseq {

// One block of coordinates of the feature vector Phi(y | x). Implementations
// are immutable and deterministic.
class FeatureFunction {
 public:
  virtual ~FeatureFunction() = default;
  virtual std::size_t dimension() const = 0;
  virtual void evaluate(const Sequence& x, const Sequence& y, std::span<double> out) const = 0;
  virtual std::string name() const = 0;
};

// beta|x| / |y| when beta|x| < |y|, otherwise |y| / (beta|x|). Zero for the
// empty target. Throws for |x| = 0 or beta <= 0.
double length_ratio(std::size_t source_length, std::size_t target_length, double beta);
double length_ratio(const Sequence& x, const Sequence& y, double beta);

struct LexEntry {
  std::string source;
  std::string target;
  double probability = 0.0;
};

// Word-to-word translation table, filtered at load time.
class LexDictionary {
 public:
  LexDictionary() = default;
  LexDictionary(std::vector<LexEntry> entries, double threshold);

  const std::vector<LexEntry>& entries() const { return entries_; }
  double threshold() const { return threshold_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<LexEntry> entries_;
  double threshold_ = 0.0;
};

// Reads "src tgt prob" lines. Blank lines are skipped. Entries below
// `threshold` are dropped; a repeated pair keeps its higher probability at the
// position of its first occurrence.
LexDictionary load_lex_dictionary(std::istream& in, double threshold);

// One indicator per dictionary entry: 1 iff the source word occurs in x and
// the target word occurs in y. Out-of-vocabulary words give a constant 0.
FeatureVector lexical_dict_features(const LexDictionary& dict, const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab, const Sequence& x,
                                    const Sequence& y);

class LengthRatioFeature final : public FeatureFunction {
 public:
  explicit LengthRatioFeature(double beta);
  std::size_t dimension() const override { return 1; }
  void evaluate(const Sequence& x, const Sequence& y, std::span<double> out) const override;
  std::string name() const override;
  double beta() const { return beta_; }

 private:
  double beta_;
};

class LexicalDictFeature final : public FeatureFunction {
 public:
  LexicalDictFeature(LexDictionary dict, const Vocabulary& source_vocab,
                     const Vocabulary& target_vocab);
  std::size_t dimension() const override { return pairs_.size(); }
  void evaluate(const Sequence& x, const Sequence& y, std::span<double> out) const override;
  std::string name() const override { return "lexical_dict"; }
  const LexDictionary& dictionary() const { return dict_; }

 private:
  struct IdPair {
    TokenId source;  // -1 when out of vocabulary
    TokenId target;
  };
  LexDictionary dict_;
  std::vector<IdPair> pairs_;
};

class ConstantFeature final : public FeatureFunction {
 public:
  explicit ConstantFeature(double value) : value_(value) {}
  std::size_t dimension() const override { return 1; }
  void evaluate(const Sequence&, const Sequence&, std::span<double> out) const override {
    out[0] = value_;
  }
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

// |y|
class TargetLengthFeature final : public FeatureFunction {
 public:
  std::size_t dimension() const override { return 1; }
  void evaluate(const Sequence&, const Sequence& y, std::span<double> out) const override {
    out[0] = static_cast<double>(y.size());
  }
  std::string name() const override { return "target_length"; }
};

class FeatureSet {
 public:
  FeatureSet& add(std::shared_ptr<const FeatureFunction> component, double scale = 1.0);

  std::size_t dimension() const { return dimension_; }
  std::size_t component_count() const { return components_.size(); }
  const FeatureFunction& component(std::size_t i) const { return *components_[i].function; }
  double scale(std::size_t i) const { return components_[i].scale; }

  // Concatenated, scaled component outputs.
  FeatureVector evaluate(const Sequence& x, const Sequence& y) const;
  void evaluate_into(const Sequence& x, const Sequence& y, std::span<double> out) const;

  // One label per coordinate, e.g. "length_ratio(beta=1)" or "lexical_dict[2]".
  std::vector<std::string> coordinate_names() const;

 private:
  struct Component {
    std::shared_ptr<const FeatureFunction> function;
    double scale;
  };
  std::vector<Component> components_;
  std::size_t dimension_ = 0;
};

// Mean of Phi(ref | x) over the references.
FeatureVector empirical_average(const FeatureSet& fs, const Sequence& x,
                                std::span<const Sequence> refs);

}  // namespace mmseq

#endif  // MMSEQ_FEATURES_HPP_
