#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <vector>

#include "somsam/error.hpp"
#include "somsam/rng.hpp"
#include "somsam/sam.hpp"

namespace somsam {
namespace {

SparseCode random_code(Rng& rng, std::size_t k, std::uint32_t n) {
  SparseCode code{n, std::vector<std::uint32_t>(k)};
  for (auto& i : code.indices) i = static_cast<std::uint32_t>(rng.uniform_index(n));
  return code;
}

std::vector<LabeledCode> random_pairs(Rng& rng, std::size_t count, std::size_t k, std::uint32_t n,
                                      ClassId classes) {
  std::vector<LabeledCode> pairs;
  for (std::size_t i = 0; i < count; ++i) {
    pairs.push_back({random_code(rng, k, n), static_cast<ClassId>(rng.uniform_index(classes))});
  }
  return pairs;
}

// Dense reference: materialize Omega as an M x kN matrix of cells and the code
// as a kN 0/1 vector, then multiply.
std::vector<std::uint64_t> dense_scores(const AssociativeClassifier& clf, const SparseCode& code) {
  const auto q = code.dense();
  std::vector<std::uint64_t> out(clf.num_classes(), 0);
  for (ClassId c = 0; c < clf.num_classes(); ++c) {
    for (std::size_t col = 0; col < clf.columns(); ++col) out[c] += std::uint64_t{clf.cell(c, col)} * q[col];
  }
  return out;
}

TEST(NewClassifier, StartsEmpty) {
  const AssociativeClassifier clf(ClassifierMode::Binary, 4, 8);
  EXPECT_EQ(clf.num_classes(), 0u);
  EXPECT_THROW(clf.predict(SparseCode{8, {0, 0, 0, 0}}), ContractError);
  EXPECT_THROW(AssociativeClassifier(ClassifierMode::Binary, 0, 8), ContractError);
  EXPECT_THROW(AssociativeClassifier(ClassifierMode::Integer, 4, 0), ContractError);
}

TEST(NewClassifier, LabelGapsBecomeZeroRows) {
  AssociativeClassifier clf(ClassifierMode::Binary, 2, 3);
  clf.learn(SparseCode{3, {0, 1}}, 0);
  clf.learn(SparseCode{3, {2, 2}}, 4);
  EXPECT_EQ(clf.num_classes(), 5u);
  const auto s = clf.scores(SparseCode{3, {2, 2}});
  EXPECT_EQ(s, (std::vector<std::uint64_t>{0, 0, 0, 0, 2}));
  for (ClassId c = 1; c < 4; ++c) EXPECT_EQ(clf.row_sum(c), 0u);
}

TEST(Learn, BinaryIsIdempotent) {
  AssociativeClassifier clf(ClassifierMode::Binary, 5, 7);
  const SparseCode code{7, {1, 6, 0, 3, 3}};
  clf.learn(code, 2);
  EXPECT_EQ(clf.row_sum(2), 5u);
  auto once = clf;
  clf.learn(code, 2);
  EXPECT_EQ(clf.bit_rows().size(), once.bit_rows().size());
  EXPECT_TRUE(std::equal(clf.bit_rows().begin(), clf.bit_rows().end(), once.bit_rows().begin()));
  EXPECT_EQ(clf.samples_per_class()[2], 2u);
}

TEST(Learn, IntegerCountsEveryHit) {
  AssociativeClassifier clf(ClassifierMode::Integer, 3, 4);
  const SparseCode code{4, {3, 0, 2}};
  for (int i = 0; i < 6; ++i) clf.learn(code, 1);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(clf.cell(1, code.column(j)), 6u);
  EXPECT_EQ(clf.row_sum(1), 18u);
}

TEST(Learn, RejectsMisshapenCodes) {
  AssociativeClassifier clf(ClassifierMode::Binary, 3, 4);
  EXPECT_THROW(clf.learn(SparseCode{4, {0, 1}}, 0), ShapeError);
  EXPECT_THROW(clf.learn(SparseCode{5, {0, 1, 2}}, 0), ShapeError);
  EXPECT_THROW(clf.learn(SparseCode{4, {0, 4, 1}}, 0), ShapeError);
  EXPECT_EQ(clf.num_classes(), 0u);
}

TEST(Learn, IntegerOverflowIsReportedNotWrapped) {
  const std::uint32_t max = std::numeric_limits<std::uint32_t>::max();
  auto clf = AssociativeClassifier::from_storage(ClassifierMode::Integer, 1, 2, {max},
                                                 {}, {max, 0});
  const auto before = clf;
  EXPECT_THROW(clf.learn(SparseCode{2, {0}}, 0), OverflowError);
  EXPECT_EQ(clf, before);
  EXPECT_NO_THROW(clf.learn(SparseCode{2, {1}}, 0));

  std::vector<LabeledCode> pairs{{SparseCode{2, {1}}, 0}, {SparseCode{2, {0}}, 0}};
  const auto staged = clf;
  EXPECT_THROW(clf.learn_batch(pairs), OverflowError);
  EXPECT_EQ(clf, staged);
}

TEST(LearnBatch, OrderDoesNotMatter) {
  Rng rng(3);
  for (auto mode : {ClassifierMode::Binary, ClassifierMode::Integer}) {
    auto pairs = random_pairs(rng, 120, 6, 9, 7);
    AssociativeClassifier a(mode, 6, 9);
    a.learn_batch(pairs);
    for (int perm = 0; perm < 5; ++perm) {
      rng.shuffle(std::span<LabeledCode>(pairs));
      AssociativeClassifier b(mode, 6, 9);
      b.learn_batch(pairs);
      EXPECT_EQ(a, b);
    }
    AssociativeClassifier seq(mode, 6, 9);
    for (const auto& p : pairs) seq.learn(p.code, p.label);
    EXPECT_EQ(a, seq);
  }
}

TEST(LearnBatch, EmptyIsIdentityAndFailureIsAtomic) {
  Rng rng(4);
  AssociativeClassifier clf(ClassifierMode::Binary, 3, 5);
  clf.learn_batch(random_pairs(rng, 10, 3, 5, 3));
  const auto before = clf;
  clf.learn_batch({});
  EXPECT_EQ(clf, before);

  auto pairs = random_pairs(rng, 5, 3, 5, 4);
  pairs[2].code.indices[1] = 5;
  try {
    clf.learn_batch(pairs);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("pair 2"), std::string::npos);
  }
  EXPECT_EQ(clf, before);
}

TEST(Merge, IdentityCommutativityAndShardEquivalence) {
  Rng rng(5);
  for (auto mode : {ClassifierMode::Binary, ClassifierMode::Integer}) {
    const auto pairs = random_pairs(rng, 100, 4, 6, 9);
    AssociativeClassifier all(mode, 4, 6);
    all.learn_batch(pairs);

    const AssociativeClassifier empty(mode, 4, 6);
    EXPECT_EQ(merge(all, empty), all);
    EXPECT_EQ(merge(empty, all), all);

    AssociativeClassifier left(mode, 4, 6);
    AssociativeClassifier right(mode, 4, 6);
    left.learn_batch(std::span(pairs).first(50));
    right.learn_batch(std::span(pairs).subspan(50));
    EXPECT_EQ(merge(left, right), all);
    EXPECT_EQ(merge(left, right), merge(right, left));
  }
}

TEST(Merge, PadsShorterOperand) {
  AssociativeClassifier a(ClassifierMode::Integer, 1, 2);
  AssociativeClassifier b(ClassifierMode::Integer, 1, 2);
  a.learn(SparseCode{2, {0}}, 0);
  b.learn(SparseCode{2, {1}}, 3);
  const auto m = merge(a, b);
  EXPECT_EQ(m.num_classes(), 4u);
  EXPECT_EQ(m.cell(0, 0), 1u);
  EXPECT_EQ(m.cell(3, 1), 1u);
  EXPECT_EQ(m.samples_per_class()[3], 1u);
}

TEST(Merge, RejectsIncompatibleOperands) {
  const AssociativeClassifier a(ClassifierMode::Binary, 2, 3);
  EXPECT_THROW(merge(a, AssociativeClassifier(ClassifierMode::Integer, 2, 3)), ContractError);
  EXPECT_THROW(merge(a, AssociativeClassifier(ClassifierMode::Binary, 3, 3)), ShapeError);
  EXPECT_THROW(merge(a, AssociativeClassifier(ClassifierMode::Binary, 2, 4)), ShapeError);
}

TEST(Scores, Examples) {
  AssociativeClassifier clf(ClassifierMode::Binary, 6, 5);
  const SparseCode trained{5, {0, 1, 2, 3, 4, 0}};
  clf.learn(trained, 1);
  EXPECT_EQ(clf.scores(trained)[1], 6u);
  EXPECT_EQ(clf.scores(trained)[0], 0u);

  // Shares blocks 0, 2 and 5 with the trained code.
  const SparseCode partial{5, {0, 4, 2, 0, 1, 0}};
  EXPECT_EQ(clf.scores(partial)[1], 3u);
  EXPECT_EQ(clf.scores(partial), dense_scores(clf, partial));
}

TEST(Scores, MatchDenseProductOnRandomInstances) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(12);
    const auto n = static_cast<std::uint32_t>(1 + rng.uniform_index(20));
    const auto mode = trial % 2 ? ClassifierMode::Binary : ClassifierMode::Integer;
    AssociativeClassifier clf(mode, k, n);
    clf.learn_batch(random_pairs(rng, 1 + rng.uniform_index(60), k, n, 6));
    for (int probe = 0; probe < 10; ++probe) {
      const auto code = random_code(rng, k, n);
      const auto expect = dense_scores(clf, code);
      EXPECT_EQ(clf.scores(code), expect);
      const auto top = static_cast<ClassId>(std::max_element(expect.begin(), expect.end()) - expect.begin());
      EXPECT_EQ(clf.predict(code), top);
    }
  }
}

TEST(Predict, SingleClassAlwaysWins) {
  Rng rng(7);
  AssociativeClassifier clf(ClassifierMode::Binary, 4, 4);
  clf.learn(random_code(rng, 4, 4), 0);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(clf.predict(random_code(rng, 4, 4)), 0u);
}

TEST(Predict, OwnCodeWinsWithDisjointTraining) {
  AssociativeClassifier clf(ClassifierMode::Binary, 3, 4);
  for (std::uint32_t c = 0; c < 4; ++c) clf.learn(SparseCode{4, {c, c, c}}, c);
  for (std::uint32_t c = 0; c < 4; ++c) EXPECT_EQ(clf.predict(SparseCode{4, {c, c, c}}), c);
}

TEST(TopK, OrderingAndTieRule) {
  AssociativeClassifier clf(ClassifierMode::Binary, 5, 2);
  const SparseCode query{2, {0, 0, 0, 0, 0}};
  clf.learn(query, 0);
  clf.learn(SparseCode{2, {0, 0, 1, 1, 1}}, 1);
  clf.learn(query, 2);
  clf.learn(SparseCode{2, {1, 1, 1, 1, 1}}, 3);
  ASSERT_EQ(clf.scores(query), (std::vector<std::uint64_t>{5, 2, 5, 0}));

  EXPECT_EQ(clf.top_k(query, 2), (std::vector<ClassScore>{{0, 5}, {2, 5}}));
  EXPECT_EQ(clf.top_k(query, 4),
            (std::vector<ClassScore>{{0, 5}, {2, 5}, {1, 2}, {3, 0}}));
  EXPECT_EQ(clf.top_k(query, 1).front().label, clf.predict(query));
  EXPECT_THROW(clf.top_k(query, 0), ContractError);
  EXPECT_THROW(clf.top_k(query, 5), ContractError);
}

TEST(Invariants, HoldThroughoutRandomTraining) {
  Rng rng(8);
  for (auto mode : {ClassifierMode::Binary, ClassifierMode::Integer}) {
    const std::size_t k = 7;
    const std::uint32_t n = 5;
    AssociativeClassifier clf(mode, k, n);
    for (const auto& pair : random_pairs(rng, 300, k, n, 10)) {
      const auto before = clf;
      clf.learn(pair.code, pair.label);
      for (ClassId c = 0; c < clf.num_classes(); ++c) {
        const auto spc = clf.samples_per_class()[c];
        if (mode == ClassifierMode::Integer) {
          EXPECT_EQ(clf.row_sum(c), k * spc);
          for (std::size_t j = 0; j < k; ++j) {
            std::uint64_t block = 0;
            for (std::uint32_t i = 0; i < n; ++i) block += clf.cell(c, j * n + i);
            EXPECT_EQ(block, spc);
          }
        } else {
          for (std::size_t j = 0; j < k; ++j) {
            std::uint64_t block = 0;
            for (std::uint32_t i = 0; i < n; ++i) block += clf.cell(c, j * n + i);
            EXPECT_LE(block, std::min<std::uint64_t>(n, spc));
          }
        }
        // Rows other than the learned label are untouched.
        if (c != pair.label && c < before.num_classes()) {
          for (std::size_t col = 0; col < clf.columns(); ++col) {
            EXPECT_EQ(clf.cell(c, col), before.cell(c, col));
          }
        }
      }
      const auto s = clf.scores(random_code(rng, k, n));
      if (mode == ClassifierMode::Binary) {
        for (auto v : s) EXPECT_LE(v, k);
      }
    }
  }
}

TEST(FromStorage, ValidatesSizesAndPadding) {
  EXPECT_THROW(AssociativeClassifier::from_storage(ClassifierMode::Binary, 2, 3, {1}, {}, {}),
               ShapeError);
  EXPECT_THROW(AssociativeClassifier::from_storage(ClassifierMode::Binary, 2, 3, {1},
                                                   {std::uint64_t{1} << 6}, {}),
               ContractError);
  EXPECT_THROW(AssociativeClassifier::from_storage(ClassifierMode::Integer, 2, 3, {1}, {}, {1, 2}),
               ShapeError);
}

}  // namespace
}  // namespace somsam
