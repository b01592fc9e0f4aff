#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "codemine/encdec.hpp"
#include "gradcheck.hpp"
#include "reference_model.hpp"
#include "tiny_model.hpp"

using namespace codemine;
using namespace codemine::testing;

namespace {

std::vector<std::pair<std::vector<int>, std::vector<int>>> random_pairs(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  for (int i = 0; i < n; ++i) out.emplace_back(random_ids(rng, 20, 1, 5), random_ids(rng, 20, 0, 5));
  return out;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<CellType> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  EncDecModel m = tiny_model(GetParam(), 11, 0.5);
  for (const auto& [name, err] : gradient_errors(m, random_pairs(3, 5), nullptr))
    EXPECT_LT(err, 1e-4) << name;
}

TEST_P(GradientCheck, MatchesWithFixedDropoutMasks) {
  EncDecModel m = tiny_model(GetParam(), 12, 0.5);
  DropoutConfig dropout{0.2, 0.5, 99};
  for (const auto& [name, err] : gradient_errors(m, random_pairs(2, 6), &dropout))
    EXPECT_LT(err, 1e-4) << name;
}

INSTANTIATE_TEST_SUITE_P(Cells, GradientCheck, ::testing::Values(CellType::gated, CellType::tanh),
                         [](const auto& info) { return cell_name(info.param); });

TEST(Encode, SingleTokenTanhMatchesFormula) {
  EncDecModel m = tiny_model(CellType::tanh, 3, 0.5);
  Eigen::MatrixXd h = encode(m, std::vector<int>{7});
  ASSERT_EQ(h.cols(), 1);
  Eigen::VectorXd expected =
      (m.params.enc.wx * m.params.src_embed.row(7).transpose() + m.params.enc.b).array().tanh();
  for (int i = 0; i < m.dims.hidden; ++i) EXPECT_NEAR(h(i, 0), expected[i], 1e-15);
}

TEST(Encode, ZeroParametersGiveZeroStates) {
  EncDecModel m = tiny_model(CellType::tanh, 3, 0.5);
  m.params.set_zero();
  Eigen::MatrixXd h = encode(m, std::vector<int>{4, 5, 6});
  EXPECT_EQ(h.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encode, ThreeTokensMatchUnrolledRecurrence) {
  for (CellType cell : {CellType::tanh, CellType::gated}) {
    EncDecModel m = tiny_model(cell, 4, 0.5);
    const std::vector<int> src{5, 9, 13};
    Eigen::MatrixXd h = encode(m, src);
    auto ref = ref_encode(m, src);
    for (int t = 0; t < 3; ++t)
      for (int i = 0; i < m.dims.hidden; ++i) EXPECT_NEAR(h(i, t), ref[t][i], 1e-12);
  }
}

TEST(Encode, PositionDependsOnlyOnPrefix) {
  EncDecModel m = tiny_model(CellType::gated, 8, 0.5);
  Eigen::MatrixXd a = encode(m, std::vector<int>{5, 6, 7});
  Eigen::MatrixXd b = encode(m, std::vector<int>{5, 6, 19, 4});
  EXPECT_EQ((a.leftCols(2) - b.leftCols(2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encode, EmptySourceThrows) {
  EncDecModel m = tiny_model(CellType::gated, 1);
  EXPECT_THROW(encode(m, std::vector<int>{}), std::invalid_argument);
}

TEST(Softmax, ClosedForms) {
  Eigen::VectorXd u = softmax(Eigen::VectorXd::Constant(5, 0.7));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(u[i], 0.2, 1e-15);
  Eigen::VectorXd two(2);
  two << std::log(2.0), 0.0;
  Eigen::VectorXd p = softmax(two);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(StepDecode, NormalizedAndMatchesReference) {
  for (CellType cell : {CellType::gated, CellType::tanh}) {
    EncDecModel m = tiny_model(cell, 21, 0.8);
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      auto src = random_ids(rng, 20, 1, 6);
      auto prev = random_ids(rng, 20, 0, 4);
      auto enc = encode(m, src);
      StepDistribution d = step_decode(m, enc, prev);
      EXPECT_NEAR(d.probabilities.sum(), 1.0, 1e-6);
      EXPECT_NEAR(d.attention.sum(), 1.0, 1e-6);
      EXPECT_GT(d.probabilities.minCoeff(), 0.0);
      EXPECT_GE(d.attention.minCoeff(), 0.0);
      RefStep ref = ref_step(m, ref_encode(m, src), prev);
      for (int v = 0; v < 20; ++v) EXPECT_NEAR(d.probabilities[v], ref.probs[v], 1e-12);
      for (std::size_t j = 0; j < src.size(); ++j) EXPECT_NEAR(d.attention[j], ref.attention[j], 1e-12);
    }
  }
}

TEST(SequenceLogProb, EqualsProductOfStepProbabilities) {
  EncDecModel m = tiny_model(CellType::gated, 31, 0.5);
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto src = random_ids(rng, 20, 1, 6);
    auto tgt = random_ids(rng, 20, 1, 6);
    const double lp = sequence_log_prob(m, src, tgt);
    EXPECT_LE(lp, 0.0);
    const double oracle = ref_sequence_prob(m, src, tgt);
    EXPECT_NEAR(std::exp(lp) / oracle, 1.0, 1e-9);
    auto steps = step_log_probs(m, src, tgt);
    ASSERT_EQ(steps.size(), tgt.size() + 1);
    EXPECT_EQ(std::accumulate(steps.begin(), steps.end(), 0.0), lp);
  }
}

TEST(SequenceLogProb, OneTokenTargetIsChainOfTwo) {
  EncDecModel m = tiny_model(CellType::gated, 32, 0.5);
  const std::vector<int> src{4, 8};
  auto enc = encode(m, src);
  const double first = std::log(step_decode(m, enc, std::vector<int>{}).probabilities[9]);
  const double eos = std::log(step_decode(m, enc, std::vector<int>{9}).probabilities[Vocabulary::kEos]);
  EXPECT_NEAR(sequence_log_prob(m, src, std::vector<int>{9}), first + eos, 1e-12);
}

TEST(SequenceLogProb, UnknownWordScoresAsUnk) {
  EncDecModel m = tiny_model(CellType::gated, 33, 0.5);
  auto a = m.target_vocab.encode({"w5", "never-seen", "w7"});
  auto b = m.target_vocab.encode({"w5", "<unk>", "w7"});
  EXPECT_EQ(a, b);
  const std::vector<int> src{6};
  EXPECT_EQ(sequence_log_prob(m, src, a), sequence_log_prob(m, src, b));
}

TEST(SequenceLogProb, PrefixScoreStrictlyDecreasesWhenAppending) {
  EncDecModel m = tiny_model(CellType::gated, 34, 0.5);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto src = random_ids(rng, 20, 1, 5);
    auto tgt = random_ids(rng, 20, 0, 5);
    auto longer = tgt;
    longer.push_back(random_ids(rng, 20, 1, 1)[0]);
    auto prefix_score = [&](const std::vector<int>& t) {
      auto s = step_log_probs(m, src, t);
      return std::accumulate(s.begin(), s.end() - 1, 0.0);
    };
    EXPECT_LT(prefix_score(longer), prefix_score(tgt));
  }
}

TEST(SequenceLogProb, TinyProbabilitiesAreFloored) {
  EncDecModel m = tiny_model(CellType::tanh, 35, 0.1);
  m.params.out_b[Vocabulary::kEos] = -1000.0;
  auto steps = step_log_probs(m, std::vector<int>{5}, std::vector<int>{6});
  EXPECT_EQ(steps.back(), kLogProbFloor);
  EXPECT_TRUE(std::isfinite(sequence_log_prob(m, std::vector<int>{5}, std::vector<int>{6})));
}

TEST(ForwardBackward, DropoutOnlyChangesTrainingPass) {
  EncDecModel m = tiny_model(CellType::gated, 36, 0.5);
  const std::vector<int> src{4, 5}, tgt{6, 7};
  DropoutConfig none{0.0, 0.0, 1};
  DropoutConfig some{0.2, 0.5, 1};
  const double clean = forward_backward(m, src, tgt, nullptr, nullptr);
  EXPECT_EQ(forward_backward(m, src, tgt, &none, nullptr), clean);
  EXPECT_NE(forward_backward(m, src, tgt, &some, nullptr), clean);
  EXPECT_EQ(forward_backward(m, src, tgt, &some, nullptr), forward_backward(m, src, tgt, &some, nullptr));
  EXPECT_DOUBLE_EQ(-sequence_log_prob(m, src, tgt), clean);
}

TEST(Params, ShapesFollowDims) {
  EncDecModel m = tiny_model(CellType::gated, 1, 0.1, 20, 4, 8);
  EXPECT_EQ(m.params.enc.wx.rows(), 24);
  EXPECT_EQ(m.params.enc.wh.cols(), 8);
  EXPECT_EQ(m.params.out_w.cols(), 16);
  EncDecModel t = tiny_model(CellType::tanh, 1, 0.1, 20, 4, 8);
  EXPECT_EQ(t.params.dec.wx.rows(), 8);
  EXPECT_TRUE(m.params.all_finite());
}
