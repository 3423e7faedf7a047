// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "gbm/ad/adam.h"
#include "gbm/ad/checkpoint.h"
#include "gbm/ad/grad_check.h"
#include "gbm/ad/ops.h"
#include "gbm/ad/tape.h"
#include "gbm/status.h"
#include "testing_support.h"

namespace gbm::ad {
namespace {

constexpr double kPrimitiveTolerance = 1e-4;

class PrimitiveGradientTest : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PrimitiveGradientTest, MatchesCentralDifferences) {
  for (const NamedGradResult& r : PrimitiveGradSuite(GetParam())) {
    EXPECT_LE(r.result.max_rel_error, kPrimitiveTolerance)
        << r.name << " at " << r.result.worst_location << ": analytic " << r.result.worst_analytic
        << " numeric " << r.result.worst_numeric;
    EXPECT_GT(r.result.checked, 0u) << r.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveGradientTest, ::testing::Range<std::uint64_t>(0, 10));

TEST(OpsTest, MatMulValues) {
  Tape tape;
  Var a = tape.Constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Var b = tape.Constant(Tensor({2, 1}, {5, 6}));
  EXPECT_EQ(MatMul(a, b).value().data, (std::vector<double>{17, 39}));
}

TEST(OpsTest, SegmentSoftmaxSumsToOnePerSegment) {
  Tape tape;
  const std::vector<std::size_t> seg = {0, 1, 0, 1, 1};
  Var p = SegmentSoftmax(tape.Constant(Tensor({5}, {1, 2, 3, -4, 5})), seg, 2);
  EXPECT_NEAR(p.value()[0] + p.value()[2], 1.0, 1e-12);
  EXPECT_NEAR(p.value()[1] + p.value()[3] + p.value()[4], 1.0, 1e-12);
}

TEST(OpsTest, GatV2AggregateMatchesComposedPrimitives) {
  Rng rng(3);
  const std::size_t n = 5, d = 3;
  auto random = [&](Shape s) {
    Tensor t(std::move(s));
    for (double& v : t.data) v = rng.Normal();
    return t;
  };
  const Tensor xs = random({n, d}), xt = random({n, d}), pos = random({2, d}), att = random({d, 1});
  const std::vector<std::size_t> src = {0, 1, 2, 3, 4, 0, 2};
  const std::vector<std::size_t> dst = {1, 1, 2, 4, 4, 4, 0};
  const std::vector<std::size_t> p = {0, 1, 1, 0, 1, 0, 0};
  Tape tape;
  Var s = tape.Constant(xs), t = tape.Constant(xt), pv = tape.Constant(pos), a = tape.Constant(att);
  Var fused = GatV2Aggregate(s, t, pv, a, src, dst, p, 0.2);
  Var z = LeakyRelu(Add(Add(GatherRows(s, src), GatherRows(t, dst)), GatherRows(pv, p)), 0.2);
  Var score = Reshape(MatMul(z, a), {src.size()});
  Var w = SegmentSoftmax(score, dst, n);
  Var composed = SegmentSum(ScaleRows(GatherRows(s, src), w), dst, n);
  for (std::size_t i = 0; i < fused.size(); ++i) {
    EXPECT_NEAR(fused.value()[i], composed.value()[i], 1e-12);
  }
  // Node 3 has no incoming edge.
  for (std::size_t k = 0; k < d; ++k) EXPECT_EQ(fused.value()[3 * d + k], 0.0);
}

TEST(OpsTest, EmbeddingMaxMasksPadding) {
  Tape tape;
  Var table = tape.Constant(Tensor({3, 2}, {9, 9, 1, -1, -2, 3}));
  const std::vector<int> ids = {1, 2, 0, 0};
  Var out = EmbeddingMax(table, ids, 2, 0);
  EXPECT_EQ(out.value().data, (std::vector<double>{1, 3, 0, 0}));
}

TEST(OpsTest, BceOfHalfIsLn2) {
  Tape tape;
  Var loss = BceLoss(tape.Constant(Tensor({4}, {0.5, 0.5, 0.5, 0.5})), Tensor({4}, {0, 1, 1, 0}));
  EXPECT_NEAR(loss.value().item(), std::log(2.0), 1e-12);
}

TEST(OpsTest, NonFiniteValuesAreRejected) {
  Tape tape;
  Var x = tape.Constant(Tensor({1}, {1e300}));
  try {
    Mul(x, x);
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteInput);
  }
}

TEST(OpsTest, DropoutIsIdentityInInference) {
  Tape tape;
  Rng rng(1);
  Var x = tape.Constant(Tensor({3}, {1, 2, 3}));
  EXPECT_EQ(Dropout(x, 0.5, false, rng).value().data, x.value().data);
}

TEST(TapeTest, GradientsAccumulateIntoBoundParameters) {
  ParameterStore params;
  Parameter& w = params.Add("w", Tensor({2}, {1.0, -2.0}));
  for (int round = 0; round < 2; ++round) {
    Tape tape;
    Var v = tape.Bind(w);
    tape.Backward(Sum(Mul(v, v)));
  }
  EXPECT_EQ(w.grad.data, (std::vector<double>{4.0, -8.0}));
  params.ZeroGrad();
  EXPECT_EQ(w.grad.data, (std::vector<double>{0.0, 0.0}));
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  ParameterStore params;
  Parameter& w = params.Add("w", Tensor({2}, {1.0, 1.0}));
  w.grad = Tensor({2}, {3.0, -0.5});
  Adam adam(AdamOptions{.lr = 0.1});
  adam.Step(params);
  // Bias-corrected first step is lr * sign(g) up to eps.
  EXPECT_NEAR(w.value[0], 0.9, 1e-6);
  EXPECT_NEAR(w.value[1], 1.1, 1e-6);
}

TEST(AdamTest, RejectsNonFiniteGradientsWithoutUpdating) {
  ParameterStore params;
  Parameter& w = params.Add("w", Tensor({1}, {1.0}));
  w.grad = Tensor({1}, {std::nan("")});
  Adam adam;
  EXPECT_THROW(adam.Step(params), Error);
  EXPECT_EQ(w.value[0], 1.0);
}

TEST(CheckpointTest, RoundTripAndChecksum) {
  ParameterStore params;
  params.Add("a", Tensor({2, 2}, {1, 2, 3, 4}));
  params.Add("b", Tensor({1}, {-0.25}));
  const std::string bytes = SerializeCheckpoint(params, {{"note", "x"}});
  const LoadedCheckpoint back = DeserializeCheckpoint(bytes);
  EXPECT_EQ(back.config.at("note"), "x");
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.tensors[0].second, params.Get("a").value);

  std::string corrupted = bytes;
  corrupted.back() ^= 0x1;
  try {
    DeserializeCheckpoint(corrupted);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksumMismatch);
  }
}

}  // namespace
}  // namespace gbm::ad
