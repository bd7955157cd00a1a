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

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mmseq/seqmodel.hpp"
#include "oracles.hpp"

using namespace mmseq;
using testing::names;
using testing::random_model;
using testing::seq;

TEST_SUITE("seqmodel") {

TEST_CASE("vocabulary encodes, decodes and rejects bad tokens") {
  Vocabulary v = Vocabulary::with_eos({"a", "b"});
  CHECK(v.size() == 3);
  CHECK(v.eos_id() == 0);
  CHECK(v.encode("a b a").ids == std::vector<TokenId>{1, 2, 1});
  CHECK(v.decode(seq({2, 1})) == "b a");
  CHECK(v.encode("").empty());
  CHECK_THROWS_AS(v.encode("a c"), Error);
  CHECK_THROWS_AS(v.encode(std::string("a ") + std::string(kEosToken)), Error);
  CHECK_THROWS_AS(Vocabulary::with_eos({"a", "a"}), Error);
  CHECK_THROWS_AS(Vocabulary::with_eos({""}), Error);
  CHECK_THROWS_AS(Vocabulary::with_eos({"a b"}), Error);
  try {
    v.encode("zzz");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidToken);
  }
}

TEST_CASE("uniform two-way rows give log(0.5 * 0.5) for a one-token target") {
  TabularModel m(names("s", 1), Vocabulary::with_eos({"a"}), 1, 3);
  CHECK(log_prob(m, seq({1}), seq({1})) == doctest::Approx(-1.386294).epsilon(1e-6));
  CHECK(log_prob(m, seq({1}), seq({1})) == doctest::Approx(std::log(0.25)).epsilon(1e-15));
}

TEST_CASE("a saturated model scores its own output at exactly zero") {
  const Sequence x = seq({1, 2});
  const Sequence y = seq({2, 1});
  const TabularModel m = testing::deterministic_model(2, 2, 3, x, y, 1e6);
  CHECK(log_prob(m, x, y) == 0.0);
}

TEST_CASE("log_prob matches the enumerated probability and the product oracle") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const TabularModel m = random_model(2, 2, 3, s);
    const Sequence x = seq({1, 2});
    const auto entries = enumerate_support(m, x);
    for (const auto& e : entries) {
      CHECK(std::exp(log_prob(m, x, e.sequence)) == e.prob);
      CHECK(e.prob == doctest::Approx(oracle::prob(m, x, e.sequence)).epsilon(1e-12));
    }
    // "a b" read off the enumeration
    const Sequence ab = seq({1, 2});
    for (const auto& e : entries)
      if (e.sequence == ab) CHECK(std::exp(log_prob(m, x, ab)) == e.prob);
  }
}

TEST_CASE("every row distribution sums to one") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const TabularModel m = random_model(3, 4, 3, s, 5.0, static_cast<int>(s % 3));
    std::vector<double> p(m.row_width());
    for (std::size_t r = 0; r < m.row_count(); ++r) {
      m.row_distribution(r, p);
      double total = 0.0;
      for (double v : p) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("support of a one-token vocabulary with max_len 2 is three sequences") {
  TabularModel m(names("s", 1), Vocabulary::with_eos({"a"}), 1, 2);
  const auto entries = enumerate_support(m, seq({1}));
  REQUIRE(entries.size() == 3);
  std::set<Sequence> seen;
  for (const auto& e : entries) seen.insert(e.sequence);
  CHECK(seen == std::set<Sequence>{seq({}), seq({1}), seq({1, 1})});
  CHECK(support_size(m) == 3);
}

TEST_CASE("enumerated probabilities sum to one and cover the oracle support") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int order = static_cast<int>(s % 3);
    const TabularModel m = random_model(2, 3, 3, 100 + s, 3.0, order);
    for (const Sequence& x : {seq({}), seq({1}), seq({2, 1, 2})}) {
      const auto entries = enumerate_support(m, x);
      CHECK(entries.size() == oracle::support(m).size());
      double total = 0.0;
      for (const auto& e : entries) total += e.prob;
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("a saturated model puts all but 1e-9 of its mass on one sequence") {
  const Sequence x = seq({1});
  const Sequence y = seq({1, 2});
  const TabularModel m = testing::deterministic_model(1, 2, 3, x, y);
  double top = 0.0, rest = 0.0;
  for (const auto& e : enumerate_support(m, x)) (e.sequence == y ? top : rest) += e.prob;
  CHECK(top > 1.0 - 1e-9);
  CHECK(rest < 1e-9);
}

TEST_CASE("enumeration above the cap is refused") {
  const TabularModel m = random_model(2, 5, 8, 1);
  try {
    enumerate_support(m, seq({1}), 1000);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEnumerationTooLarge);
  }
}

TEST_CASE("sequences longer than max_len and foreign ids are rejected") {
  const TabularModel m = random_model(2, 2, 2, 1);
  try {
    log_prob(m, seq({1}), seq({1, 1, 1}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidSequence);
  }
  try {
    log_prob(m, seq({1}), seq({7}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidToken);
  }
  CHECK_THROWS_AS(log_prob(m, seq({0}), seq({1})), Error);  // end marker in the source
  CHECK_THROWS_AS(grad_log_prob(m, seq({1}), seq({1, 1, 1})), Error);
}

TEST_CASE("forced end marker at max_len contributes factor one") {
  const TabularModel m = random_model(1, 2, 2, 3);
  const Sequence x = seq({1});
  const Sequence y = seq({2, 1});
  std::vector<double> p(m.row_width());
  m.row_distribution(oracle::row(m, x, {}), p);
  double expected = p[2];
  m.row_distribution(oracle::row(m, x, {2}), p);
  expected *= p[1];
  CHECK(std::exp(log_prob(m, x, y)) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gradient on a uniform two-way row is (+0.5, -0.5)") {
  TabularModel m(names("s", 1), Vocabulary::with_eos({"a"}), 1, 1);
  const GradientVector g = grad_log_prob(m, seq({1}), seq({1}));
  const std::size_t r = oracle::row(m, seq({1}), {});
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == r * 2 + 1) CHECK(g[i] == 0.5);
    else if (i == r * 2) CHECK(g[i] == -0.5);
    else CHECK(g[i] == 0.0);
  }
}

TEST_CASE("saturated model has a vanishing gradient at its mode") {
  const Sequence x = seq({1, 2});
  const Sequence y = seq({1, 2, 2});
  const TabularModel m = testing::deterministic_model(2, 2, 3, x, y, 30.0, 2);
  const GradientVector g = grad_log_prob(m, x, y);
  for (double v : g.values()) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("grad_log_prob agrees with central differences") {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const int order = static_cast<int>(s % 3);
    const TabularModel m = random_model(2, 3, 3, 500 + s, 1.5, order);
    const Sequence x = testing::random_sequence(gen, 2, 0, 3);
    const Sequence y = testing::random_sequence(gen, 3, 0, 3);
    const GradientVector g = grad_log_prob(m, x, y);
    const auto fd = oracle::central_difference(
        oracle::with_params(m, [&](const TabularModel& p) { return std::log(oracle::prob(p, x, y)); }),
        oracle::params_of(m), 1e-5);
    worst = std::max(worst, oracle::rel_error(g.span(), fd));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("score function has zero mean under the model") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const TabularModel m = random_model(2, 3, 3, 900 + s, 2.0);
    const Sequence x = seq({2, 1});
    std::vector<double> mean(m.parameter_count(), 0.0);
    for (const Sequence& y : oracle::support(m)) {
      const double p = oracle::prob(m, x, y);
      const GradientVector g = grad_log_prob(m, x, y);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p * g[i];
    }
    CHECK(oracle::max_abs(mean) <= 1e-8);
  }
}

TEST_CASE("sampling is reproducible and stays in the support") {
  const TabularModel m = random_model(2, 3, 3, 11, 2.0);
  const Sequence x = seq({1, 2});
  std::set<Sequence> support;
  for (const auto& e : enumerate_support(m, x)) support.insert(e.sequence);
  Rng a(42), b(42);
  for (int i = 0; i < 2000; ++i) {
    const Sequence s = sample(m, x, a);
    CHECK(s == sample(m, x, b));
    CHECK(support.count(s) == 1);
    CHECK(s.size() <= 3);
  }
}

TEST_CASE("a saturated model always samples its mode") {
  const Sequence x = seq({2});
  const Sequence y = seq({2, 1, 1});
  const TabularModel m = testing::deterministic_model(2, 2, 3, x, y);
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    CHECK(sample(m, x, rng) == y);
  }
  CHECK(greedy_decode(m, x) == y);
}

TEST_CASE("sample frequencies follow the enumerated probabilities") {
  // Three-sequence support: "", "a", "a a".
  const TabularModel m = TabularModel::random(names("s", 1), Vocabulary::with_eos({"a"}), 1, 2, 1.0, 5);
  const Sequence x = seq({1});
  std::map<Sequence, double> expected;
  for (const Sequence& y : oracle::support(m)) expected[y] = oracle::prob(m, x, y);
  std::map<Sequence, double> counts;
  Rng rng(99);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) counts[sample(m, x, rng)] += 1.0;
  double chi2 = 0.0;
  for (const auto& [y, p] : expected) {
    const double e = p * n;
    chi2 += (counts[y] - e) * (counts[y] - e) / e;
  }
  // chi-square with 2 degrees of freedom: P(X > 13.82) = 0.001
  CHECK(chi2 < 13.82);
}

TEST_CASE("apply_update leaves the model unchanged for zero rate or zero gradient") {
  const TabularModel m = random_model(2, 3, 3, 3);
  TabularModel a = m;
  apply_update(a, grad_log_prob(m, seq({1}), seq({1, 2})), 0.0);
  CHECK(a == m);
  TabularModel b = m;
  apply_update(b, GradientVector(m.parameter_count()), 0.7);
  CHECK(b == m);
  CHECK_THROWS_AS(apply_update(b, GradientVector(3), 0.1), Error);
}

TEST_CASE("one likelihood step raises the log-probability of the observed pair") {
  std::mt19937_64 gen(3);
  for (std::uint64_t s = 0; s < 30; ++s) {
    TabularModel m = random_model(3, 3, 4, 40 + s, 2.0);
    const Sequence x = testing::random_sequence(gen, 3, 1, 3);
    const Sequence y = testing::random_sequence(gen, 3, 0, 4);
    const double before = log_prob(m, x, y);
    apply_update(m, grad_log_prob(m, x, y), 1e-2);
    CHECK(log_prob(m, x, y) > before);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const TabularModel m = random_model(3, 4, 5, 17, 3.0, 2);
  std::stringstream buf;
  save_checkpoint(m, buf);
  const TabularModel back = load_checkpoint(buf);
  CHECK(back == m);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) CHECK(back.logits()[i] == m.logits()[i]);
}

TEST_CASE("malformed checkpoints raise parse errors") {
  for (const char* text : {"", "{", "{\"format\": \"other\"}", "[1, 2, 3]"}) {
    std::stringstream buf(text);
    try {
      load_checkpoint(buf);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
    }
  }
}

}  // TEST_SUITE
