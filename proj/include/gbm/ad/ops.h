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

#ifndef GBM_AD_OPS_H_
#define GBM_AD_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "gbm/ad/tape.h"
#include "gbm/random.h"

// Differentiable primitives. Every op records its result on the tape of its
// inputs; all inputs must live on the same tape. Shape errors throw
// Error(kShapeMismatch); non-finite results throw Error(kNonFiniteInput).
namespace gbm::ad {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBceClamp = 1e-7;

// [m x k] * [k x n] -> [m x n]
Var MatMul(Var a, Var b);

// Elementwise sum. `b` may match `a` exactly or match a's trailing dims, in
// which case it is broadcast over the leading dims.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var x, double factor);

Var LeakyRelu(Var x, double slope);
Var Sigmoid(Var x);
Var Tanh(Var x);

// Sum of all elements -> scalar.
Var Sum(Var x);
Var Reshape(Var x, Shape shape);
Var Concat(const std::vector<Var>& parts, std::size_t axis);
// Stacks equally shaped tensors along a new leading axis.
Var Stack(const std::vector<Var>& parts);
// Removes `axis`. Ties route the gradient to the first maximal entry.
Var MaxOverAxis(Var x, std::size_t axis);
Var MeanOverAxis(Var x, std::size_t axis);

// Rows of `x` (axis 0) selected by `indices`, duplicates allowed.
Var GatherRows(Var x, std::span<const std::size_t> indices);
// Multiplies row i of x [E x ...] by w[i], w of shape [E].
Var ScaleRows(Var x, Var w);

// Segment reductions over axis 0: values [E x ...] with segment_ids[e] in
// [0, num_segments) -> [num_segments x ...]. Empty segments yield zeros.
Var SegmentSum(Var values, std::span<const std::size_t> segment_ids,
               std::size_t num_segments);
Var SegmentMax(Var values, std::span<const std::size_t> segment_ids,
               std::size_t num_segments);
// Softmax of logits [E] within each segment.
Var SegmentSoftmax(Var logits, std::span<const std::size_t> segment_ids,
                   std::size_t num_segments);

// Normalizes over the last axis, then applies gain and bias of shape [D].
Var LayerNorm(Var x, Var gain, Var bias, double eps = kLayerNormEps);

// Inverted dropout; identity when !train or p == 0.
Var Dropout(Var x, double p, bool train, Rng& rng);

// Mean binary cross entropy with predictions clamped to
// [kBceClamp, 1 - kBceClamp]. `labels` must have pred's element count.
Var BceLoss(Var pred, const Tensor& labels);

// GATv2-style attention aggregation over the edges (src[e] -> dst[e]).
// For every edge the score is
//   att . leaky_relu(source[src] + target[dst] + position[pos], slope),
// scores are softmax-normalized over the edges that share a destination, and
// out[i] = sum of weight * source[src] over the edges entering i. `source`
// and `target` are [N x D], `position` is [P x D], `att` holds D values.
// Nodes without incoming edges get zero rows. Equivalent to composing
// GatherRows, Add, LeakyRelu, MatMul, SegmentSoftmax, ScaleRows and
// SegmentSum, without materializing the per-edge intermediates.
Var GatV2Aggregate(Var source, Var target, Var position, Var att,
                   std::span<const std::size_t> src,
                   std::span<const std::size_t> dst,
                   std::span<const std::size_t> pos, double slope);

// Token lookup followed by an elementwise max over each node's tokens.
// `ids` is row-major [num_nodes x length]; entries equal to `pad_id` are
// masked out. Nodes without any non-pad token produce a zero row.
Var EmbeddingMax(Var table, std::span<const int> ids, std::size_t length,
                 int pad_id);

}  // namespace gbm::ad

#endif  // GBM_AD_OPS_H_
