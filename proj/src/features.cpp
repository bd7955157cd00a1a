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

#include "mmseq/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace mmseq {

double length_ratio(std::size_t source_length, std::size_t target_length, double beta) {
  require(source_length >= 1, ErrorCode::kInvalidArgument,
          "length_ratio needs a non-empty source");
  require(beta > 0.0 && std::isfinite(beta), ErrorCode::kInvalidArgument,
          "length_ratio beta must be positive");
  if (target_length == 0) return 0.0;
  const double scaled = beta * static_cast<double>(source_length);
  const auto y = static_cast<double>(target_length);
  return scaled < y ? scaled / y : y / scaled;
}

double length_ratio(const Sequence& x, const Sequence& y, double beta) {
  return length_ratio(x.size(), y.size(), beta);
}

LexDictionary::LexDictionary(std::vector<LexEntry> entries, double threshold)
    : entries_(std::move(entries)), threshold_(threshold) {
  std::map<std::pair<std::string, std::string>, bool> seen;
  for (const auto& e : entries_) {
    require(e.probability >= threshold_, ErrorCode::kInvalidArgument,
            "dictionary entry below threshold");
    require(seen.emplace(std::make_pair(e.source, e.target), true).second,
            ErrorCode::kInvalidArgument, "duplicate dictionary pair");
  }
}

LexDictionary load_lex_dictionary(std::istream& in, double threshold) {
  require(threshold >= 0.0 && threshold <= 1.0, ErrorCode::kInvalidArgument,
          "dictionary threshold must lie in [0, 1]");
  std::vector<LexEntry> kept;
  std::map<std::pair<std::string, std::string>, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(std::move(f));
    if (parts.empty()) continue;
    const std::string where = "dictionary line " + std::to_string(line_no);
    require(parts.size() == 3, ErrorCode::kParse,
            where + ": expected 'src tgt prob', got " + std::to_string(parts.size()) +
                " fields");
    double prob = 0.0;
    std::size_t used = 0;
    try {
      prob = std::stod(parts[2], &used);
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, where + ": probability '" + parts[2] + "' is not a number");
    }
    require(used == parts[2].size(), ErrorCode::kParse,
            where + ": probability '" + parts[2] + "' is not a number");
    require(prob >= 0.0 && prob <= 1.0, ErrorCode::kParse,
            where + ": probability " + parts[2] + " outside [0, 1]");
    if (prob < threshold) continue;
    auto key = std::make_pair(parts[0], parts[1]);
    if (auto it = position.find(key); it != position.end()) {
      kept[it->second].probability = std::max(kept[it->second].probability, prob);
      continue;
    }
    position.emplace(key, kept.size());
    kept.push_back({parts[0], parts[1], prob});
  }
  return LexDictionary(std::move(kept), threshold);
}

FeatureVector lexical_dict_features(const LexDictionary& dict, const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab, const Sequence& x,
                                    const Sequence& y) {
  LexicalDictFeature feature(dict, source_vocab, target_vocab);
  FeatureVector out(feature.dimension());
  feature.evaluate(x, y, out.span());
  return out;
}

LengthRatioFeature::LengthRatioFeature(double beta) : beta_(beta) {
  require(beta > 0.0 && std::isfinite(beta), ErrorCode::kInvalidArgument,
          "length_ratio beta must be positive");
}

void LengthRatioFeature::evaluate(const Sequence& x, const Sequence& y,
                                  std::span<double> out) const {
  out[0] = length_ratio(x, y, beta_);
}

std::string LengthRatioFeature::name() const {
  std::ostringstream s;
  s << "length_ratio(beta=" << beta_ << ")";
  return s.str();
}

LexicalDictFeature::LexicalDictFeature(LexDictionary dict, const Vocabulary& source_vocab,
                                       const Vocabulary& target_vocab)
    : dict_(std::move(dict)) {
  require(!dict_.empty(), ErrorCode::kInvalidArgument, "lexical dictionary is empty");
  pairs_.reserve(dict_.size());
  for (const auto& e : dict_.entries()) {
    pairs_.push_back({source_vocab.find(e.source).value_or(-1),
                      target_vocab.find(e.target).value_or(-1)});
  }
}

void LexicalDictFeature::evaluate(const Sequence& x, const Sequence& y,
                                  std::span<double> out) const {
  const std::unordered_set<TokenId> xs(x.ids.begin(), x.ids.end());
  const std::unordered_set<TokenId> ys(y.ids.begin(), y.ids.end());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    out[i] = (p.source >= 0 && p.target >= 0 && xs.contains(p.source) && ys.contains(p.target))
                 ? 1.0
                 : 0.0;
  }
}

FeatureSet& FeatureSet::add(std::shared_ptr<const FeatureFunction> component, double scale) {
  require(component != nullptr, ErrorCode::kInvalidArgument, "null feature component");
  require(std::isfinite(scale), ErrorCode::kInvalidArgument, "feature scale must be finite");
  dimension_ += component->dimension();
  components_.push_back({std::move(component), scale});
  return *this;
}

void FeatureSet::evaluate_into(const Sequence& x, const Sequence& y,
                               std::span<double> out) const {
  require(out.size() == dimension_, ErrorCode::kShapeMismatch,
          "feature buffer does not match feature dimension");
  std::size_t offset = 0;
  for (const auto& c : components_) {
    const std::size_t d = c.function->dimension();
    auto block = out.subspan(offset, d);
    c.function->evaluate(x, y, block);
    if (c.scale != 1.0)
      for (double& v : block) v *= c.scale;
    offset += d;
  }
}

FeatureVector FeatureSet::evaluate(const Sequence& x, const Sequence& y) const {
  FeatureVector out(dimension_);
  evaluate_into(x, y, out.span());
  return out;
}

std::vector<std::string> FeatureSet::coordinate_names() const {
  std::vector<std::string> names;
  for (const auto& c : components_) {
    const std::size_t d = c.function->dimension();
    if (d == 1) {
      names.push_back(c.function->name());
      continue;
    }
    for (std::size_t i = 0; i < d; ++i)
      names.push_back(c.function->name() + "[" + std::to_string(i) + "]");
  }
  return names;
}

FeatureVector empirical_average(const FeatureSet& fs, const Sequence& x,
                                std::span<const Sequence> refs) {
  require(!refs.empty(), ErrorCode::kInvalidArgument,
          "empirical average needs at least one reference");
  // Incremental mean: identical references reproduce their value exactly.
  FeatureVector mean = fs.evaluate(x, refs[0]);
  for (std::size_t k = 1; k < refs.size(); ++k) {
    const FeatureVector phi = fs.evaluate(x, refs[k]);
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += (phi[i] - mean[i]) / static_cast<double>(k + 1);
  }
  return mean;
}

}  // namespace mmseq
