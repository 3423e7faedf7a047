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

#include "gbm/ad/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gbm/status.h"

namespace gbm::ad {
namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;

[[noreturn]] void ShapeError(std::string_view op, const std::string& detail) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + detail);
}

void RequireSameTape(std::string_view op, Var a, Var b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(op) + ": inputs on different tapes");
  }
}

// Splits a shape around `axis` into (outer, axis extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape DropAxis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  return out;
}

std::size_t RowWidth(const Shape& shape) {
  std::size_t w = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) w *= shape[i];
  return w;
}

template <typename F>
Var Unary(Var x, std::string_view name, F&& forward_backward) {
  const Tensor& in = x.value();
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = forward_backward.forward(in[i]);
  }
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid, fb = forward_backward](Tape& tape, std::size_t self) {
        const Tensor& in = tape.value(xid);
        const Tensor& y = tape.value(self);
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t i = 0; i < in.size(); ++i) {
          dx[i] += dy[i] * fb.derivative(in[i], y[i]);
        }
      },
      name);
}

}  // namespace

Var MatMul(Var a, Var b) {
  RequireSameTape("MatMul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    ShapeError("MatMul", ShapeToString(av.shape) + " x " +
                             ShapeToString(bv.shape));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  MatMap(out.data.data(), m, n).noalias() =
      ConstMatMap(av.data.data(), m, k) * ConstMatMap(bv.data.data(), k, n);
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape()->Record(
      std::move(out), {a, b},
      [aid, bid, m, k, n](Tape& tape, std::size_t self) {
        ConstMatMap dy(tape.GradBuffer(self).data.data(), m, n);
        if (tape.requires_grad(aid)) {
          MatMap(tape.GradBuffer(aid).data.data(), m, k).noalias() +=
              dy * ConstMatMap(tape.value(bid).data.data(), k, n).transpose();
        }
        if (tape.requires_grad(bid)) {
          MatMap(tape.GradBuffer(bid).data.data(), k, n).noalias() +=
              ConstMatMap(tape.value(aid).data.data(), m, k).transpose() * dy;
        }
      },
      "MatMul");
}

Var Add(Var a, Var b) {
  RequireSameTape("Add", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t nb = bv.size();
  bool trailing = bv.rank() <= av.rank() &&
                  std::equal(bv.shape.begin(), bv.shape.end(),
                             av.shape.end() - bv.rank());
  if (!trailing) {
    ShapeError("Add", ShapeToString(av.shape) + " + " +
                          ShapeToString(bv.shape));
  }
  Tensor out = av;
  for (std::size_t base = 0; base < out.size(); base += nb) {
    for (std::size_t j = 0; j < nb; ++j) out[base + j] += bv[j];
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape()->Record(
      std::move(out), {a, b},
      [aid, bid, nb](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        if (tape.requires_grad(aid)) {
          Tensor& da = tape.GradBuffer(aid);
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
        }
        if (tape.requires_grad(bid)) {
          Tensor& db = tape.GradBuffer(bid);
          for (std::size_t base = 0; base < dy.size(); base += nb) {
            for (std::size_t j = 0; j < nb; ++j) db[j] += dy[base + j];
          }
        }
      },
      "Add");
}

Var Sub(Var a, Var b) { return Add(a, Scale(b, -1.0)); }

Var Mul(Var a, Var b) {
  RequireSameTape("Mul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape != bv.shape) {
    ShapeError("Mul", ShapeToString(av.shape) + " * " +
                          ShapeToString(bv.shape));
  }
  Tensor out(av.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape()->Record(
      std::move(out), {a, b},
      [aid, bid](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        const Tensor& av = tape.value(aid);
        const Tensor& bv = tape.value(bid);
        if (tape.requires_grad(aid)) {
          Tensor& da = tape.GradBuffer(aid);
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
        }
        if (tape.requires_grad(bid)) {
          Tensor& db = tape.GradBuffer(bid);
          for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
        }
      },
      "Mul");
}

Var Scale(Var x, double factor) {
  struct Fb {
    double factor;
    double forward(double v) const { return v * factor; }
    double derivative(double, double) const { return factor; }
  };
  return Unary(x, "Scale", Fb{factor});
}

Var LeakyRelu(Var x, double slope) {
  struct Fb {
    double slope;
    double forward(double v) const { return v >= 0 ? v : slope * v; }
    double derivative(double v, double) const { return v >= 0 ? 1.0 : slope; }
  };
  return Unary(x, "LeakyRelu", Fb{slope});
}

Var Sigmoid(Var x) {
  struct Fb {
    double forward(double v) const {
      if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
      const double e = std::exp(v);
      return e / (1.0 + e);
    }
    double derivative(double, double y) const { return y * (1.0 - y); }
  };
  return Unary(x, "Sigmoid", Fb{});
}

Var Tanh(Var x) {
  struct Fb {
    double forward(double v) const { return std::tanh(v); }
    double derivative(double, double y) const { return 1.0 - y * y; }
  };
  return Unary(x, "Tanh", Fb{});
}

Var Sum(Var x) {
  const Tensor& in = x.value();
  double total = 0;
  for (double v : in.data) total += v;
  const std::size_t xid = x.id();
  return x.tape()->Record(
      Tensor::Scalar(total), {x},
      [xid](Tape& tape, std::size_t self) {
        const double g = tape.GradBuffer(self)[0];
        Tensor& dx = tape.GradBuffer(xid);
        for (double& v : dx.data) v += g;
      },
      "Sum");
}

Var Reshape(Var x, Shape shape) {
  const Tensor& in = x.value();
  if (NumElements(shape) != in.size()) {
    ShapeError("Reshape", ShapeToString(in.shape) + " -> " +
                              ShapeToString(shape));
  }
  Tensor out(std::move(shape), in.data);
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      },
      "Reshape");
}

Var Concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) ShapeError("Concat", "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) ShapeError("Concat", "axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    RequireSameTape("Concat", parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != first.size()) ShapeError("Concat", "rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) {
        ShapeError("Concat", ShapeToString(s) + " vs " + ShapeToString(first));
      }
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit total = SplitAt(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> chunk;  // per part: extent * inner
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t c = v.dim(axis) * total.inner;
    for (std::size_t o = 0; o < total.outer; ++o) {
      std::copy_n(v.data.begin() + o * c, c,
                  out.data.begin() + o * total.extent * total.inner + offset);
    }
    offset += c;
    ids.push_back(p.id());
    chunk.push_back(c);
  }
  const std::size_t row = total.extent * total.inner;
  const std::size_t outer = total.outer;
  return parts[0].tape()->Record(
      std::move(out), parts,
      [ids, chunk, row, outer](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (tape.requires_grad(ids[k])) {
            Tensor& dx = tape.GradBuffer(ids[k]);
            for (std::size_t o = 0; o < outer; ++o) {
              for (std::size_t j = 0; j < chunk[k]; ++j) {
                dx[o * chunk[k] + j] += dy[o * row + offset + j];
              }
            }
          }
          offset += chunk[k];
        }
      },
      "Concat");
}

Var Stack(const std::vector<Var>& parts) {
  if (parts.empty()) ShapeError("Stack", "no inputs");
  std::vector<Var> expanded;
  expanded.reserve(parts.size());
  for (const Var& p : parts) {
    Shape s = p.shape();
    s.insert(s.begin(), 1);
    expanded.push_back(Reshape(p, std::move(s)));
  }
  return Concat(expanded, 0);
}

Var MaxOverAxis(Var x, std::size_t axis) {
  const Tensor& in = x.value();
  if (axis >= in.rank()) ShapeError("MaxOverAxis", "axis out of range");
  const AxisSplit s = SplitAt(in.shape, axis);
  if (s.extent == 0) ShapeError("MaxOverAxis", "empty axis");
  Tensor out(DropAxis(in.shape, axis));
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.extent * s.inner + i;
      for (std::size_t a = 1; a < s.extent; ++a) {
        const std::size_t idx = (o * s.extent + a) * s.inner + i;
        if (in[idx] > in[best]) best = idx;
      }
      out[o * s.inner + i] = in[best];
      argmax[o * s.inner + i] = best;
    }
  }
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid, argmax = std::move(argmax)](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t j = 0; j < argmax.size(); ++j) dx[argmax[j]] += dy[j];
      },
      "MaxOverAxis");
}

Var MeanOverAxis(Var x, std::size_t axis) {
  const Tensor& in = x.value();
  if (axis >= in.rank()) ShapeError("MeanOverAxis", "axis out of range");
  const AxisSplit s = SplitAt(in.shape, axis);
  if (s.extent == 0) ShapeError("MeanOverAxis", "empty axis");
  Tensor out(DropAxis(in.shape, axis));
  const double inv = 1.0 / static_cast<double>(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t a = 0; a < s.extent; ++a) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += in[(o * s.extent + a) * s.inner + i];
      }
    }
  }
  for (double& v : out.data) v *= inv;
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid, s, inv](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t a = 0; a < s.extent; ++a) {
            for (std::size_t i = 0; i < s.inner; ++i) {
              dx[(o * s.extent + a) * s.inner + i] += dy[o * s.inner + i] * inv;
            }
          }
        }
      },
      "MeanOverAxis");
}

Var GatherRows(Var x, std::span<const std::size_t> indices) {
  const Tensor& in = x.value();
  if (in.rank() == 0) ShapeError("GatherRows", "scalar input");
  const std::size_t rows = in.dim(0);
  const std::size_t width = RowWidth(in.shape);
  Shape shape = in.shape;
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) {
      ShapeError("GatherRows", "index " + std::to_string(indices[r]) +
                                   " >= " + std::to_string(rows));
    }
    std::copy_n(in.data.begin() + indices[r] * width, width,
                out.data.begin() + r * width);
  }
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid, width, idx = std::vector<std::size_t>(indices.begin(),
                                                  indices.end())](
          Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          for (std::size_t j = 0; j < width; ++j) {
            dx[idx[r] * width + j] += dy[r * width + j];
          }
        }
      },
      "GatherRows");
}

Var ScaleRows(Var x, Var w) {
  RequireSameTape("ScaleRows", x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() == 0 || wv.rank() != 1 || wv.dim(0) != xv.dim(0)) {
    ShapeError("ScaleRows", ShapeToString(xv.shape) + " by " +
                                ShapeToString(wv.shape));
  }
  const std::size_t width = RowWidth(xv.shape);
  Tensor out(xv.shape);
  for (std::size_t r = 0; r < wv.size(); ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      out[r * width + j] = xv[r * width + j] * wv[r];
    }
  }
  const std::size_t xid = x.id(), wid = w.id();
  return x.tape()->Record(
      std::move(out), {x, w},
      [xid, wid, width](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        const Tensor& xv = tape.value(xid);
        const Tensor& wv = tape.value(wid);
        const bool gx = tape.requires_grad(xid);
        const bool gw = tape.requires_grad(wid);
        Tensor* dx = gx ? &tape.GradBuffer(xid) : nullptr;
        Tensor* dw = gw ? &tape.GradBuffer(wid) : nullptr;
        for (std::size_t r = 0; r < wv.size(); ++r) {
          double acc = 0;
          for (std::size_t j = 0; j < width; ++j) {
            const std::size_t i = r * width + j;
            if (gx) (*dx)[i] += dy[i] * wv[r];
            acc += dy[i] * xv[i];
          }
          if (gw) (*dw)[r] += acc;
        }
      },
      "ScaleRows");
}

namespace {

void CheckSegments(std::string_view op, const Tensor& values,
                   std::span<const std::size_t> ids, std::size_t n) {
  if (values.rank() == 0 || values.dim(0) != ids.size()) {
    ShapeError(op, "values " + ShapeToString(values.shape) + " with " +
                       std::to_string(ids.size()) + " segment ids");
  }
  for (std::size_t id : ids) {
    if (id >= n) {
      ShapeError(op, "segment id " + std::to_string(id) + " >= " +
                         std::to_string(n));
    }
  }
}

}  // namespace

Var SegmentSum(Var values, std::span<const std::size_t> segment_ids,
               std::size_t num_segments) {
  const Tensor& in = values.value();
  CheckSegments("SegmentSum", in, segment_ids, num_segments);
  const std::size_t width = RowWidth(in.shape);
  Shape shape = in.shape;
  shape[0] = num_segments;
  Tensor out(shape);
  for (std::size_t e = 0; e < segment_ids.size(); ++e) {
    const std::size_t s = segment_ids[e];
    for (std::size_t j = 0; j < width; ++j) {
      out[s * width + j] += in[e * width + j];
    }
  }
  const std::size_t vid = values.id();
  return values.tape()->Record(
      std::move(out), {values},
      [vid, width,
       seg = std::vector<std::size_t>(segment_ids.begin(), segment_ids.end())](
          Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(vid);
        for (std::size_t e = 0; e < seg.size(); ++e) {
          for (std::size_t j = 0; j < width; ++j) {
            dx[e * width + j] += dy[seg[e] * width + j];
          }
        }
      },
      "SegmentSum");
}

Var SegmentMax(Var values, std::span<const std::size_t> segment_ids,
               std::size_t num_segments) {
  const Tensor& in = values.value();
  CheckSegments("SegmentMax", in, segment_ids, num_segments);
  const std::size_t width = RowWidth(in.shape);
  Shape shape = in.shape;
  shape[0] = num_segments;
  Tensor out(shape);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> argmax(out.size(), kNone);
  for (std::size_t e = 0; e < segment_ids.size(); ++e) {
    const std::size_t s = segment_ids[e];
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t o = s * width + j;
      const std::size_t i = e * width + j;
      if (argmax[o] == kNone || in[i] > in[argmax[o]]) argmax[o] = i;
    }
  }
  for (std::size_t o = 0; o < out.size(); ++o) {
    if (argmax[o] != kNone) out[o] = in[argmax[o]];
  }
  const std::size_t vid = values.id();
  return values.tape()->Record(
      std::move(out), {values},
      [vid, argmax = std::move(argmax)](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(vid);
        for (std::size_t o = 0; o < argmax.size(); ++o) {
          if (argmax[o] != kNone) dx[argmax[o]] += dy[o];
        }
      },
      "SegmentMax");
}

Var SegmentSoftmax(Var logits, std::span<const std::size_t> segment_ids,
                   std::size_t num_segments) {
  const Tensor& in = logits.value();
  if (in.rank() != 1) ShapeError("SegmentSoftmax", "logits must be rank 1");
  CheckSegments("SegmentSoftmax", in, segment_ids, num_segments);
  std::vector<double> seg_max(num_segments,
                              -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < in.size(); ++e) {
    seg_max[segment_ids[e]] = std::max(seg_max[segment_ids[e]], in[e]);
  }
  Tensor out(in.shape);
  std::vector<double> seg_sum(num_segments, 0.0);
  for (std::size_t e = 0; e < in.size(); ++e) {
    out[e] = std::exp(in[e] - seg_max[segment_ids[e]]);
    seg_sum[segment_ids[e]] += out[e];
  }
  for (std::size_t e = 0; e < in.size(); ++e) out[e] /= seg_sum[segment_ids[e]];
  const std::size_t lid = logits.id();
  return logits.tape()->Record(
      std::move(out), {logits},
      [lid, num_segments,
       seg = std::vector<std::size_t>(segment_ids.begin(), segment_ids.end())](
          Tape& tape, std::size_t self) {
        const Tensor& y = tape.value(self);
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(lid);
        std::vector<double> dot(num_segments, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += y[e] * dy[e];
        for (std::size_t e = 0; e < seg.size(); ++e) {
          dx[e] += y[e] * (dy[e] - dot[seg[e]]);
        }
      },
      "SegmentSoftmax");
}

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  RequireSameTape("LayerNorm", x, gain);
  RequireSameTape("LayerNorm", x, bias);
  const Tensor& in = x.value();
  if (in.rank() == 0) ShapeError("LayerNorm", "scalar input");
  const std::size_t d = in.shape.back();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    ShapeError("LayerNorm", "gain/bias must be [" + std::to_string(d) + "]");
  }
  const std::size_t rows = in.size() / d;
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  Tensor out(in.shape);
  std::vector<double> xhat(in.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data.data() + r * d;
    double mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * inv_std[r];
      xhat[r * d + j] = h;
      out[r * d + j] = h * g[j] + b[j];
    }
  }
  const std::size_t xid = x.id(), gid = gain.id(), bid = bias.id();
  return x.tape()->Record(
      std::move(out), {x, gain, bias},
      [xid, gid, bid, d, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        const Tensor& g = tape.value(gid);
        if (tape.requires_grad(gid)) {
          Tensor& dg = tape.GradBuffer(gid);
          for (std::size_t i = 0; i < dy.size(); ++i) dg[i % d] += dy[i] * xhat[i];
        }
        if (tape.requires_grad(bid)) {
          Tensor& db = tape.GradBuffer(bid);
          for (std::size_t i = 0; i < dy.size(); ++i) db[i % d] += dy[i];
        }
        if (!tape.requires_grad(xid)) return;
        Tensor& dx = tape.GradBuffer(xid);
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_dxhat = 0, mean_dxhat_xhat = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = dy[r * d + j] * g[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat[r * d + j];
          }
          mean_dxhat /= static_cast<double>(d);
          mean_dxhat_xhat /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            dx[r * d + j] += inv_std[r] * (dxhat[j] - mean_dxhat -
                                           xhat[r * d + j] * mean_dxhat_xhat);
          }
        }
      },
      "LayerNorm");
}

Var Dropout(Var x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "dropout probability must be in [0, 1)");
  }
  if (!train || p == 0.0) return x;
  const Tensor& in = x.value();
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(in.size());
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) {
    mask[i] = rng.Uniform() < p ? 0.0 : keep_scale;
    out[i] = in[i] * mask[i];
  }
  const std::size_t xid = x.id();
  return x.tape()->Record(
      std::move(out), {x},
      [xid, mask = std::move(mask)](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dx = tape.GradBuffer(xid);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
      },
      "Dropout");
}

Var BceLoss(Var pred, const Tensor& labels) {
  const Tensor& p = pred.value();
  if (p.size() != labels.size() || p.size() == 0) {
    ShapeError("BceLoss", std::to_string(p.size()) + " predictions vs " +
                              std::to_string(labels.size()) + " labels");
  }
  const double n = static_cast<double>(p.size());
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    total -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  const std::size_t pid = pred.id();
  return pred.tape()->Record(
      Tensor::Scalar(total / n), {pred},
      [pid, n, labels](Tape& tape, std::size_t self) {
        const double g = tape.GradBuffer(self)[0];
        const Tensor& p = tape.value(pid);
        Tensor& dp = tape.GradBuffer(pid);
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (p[i] < kBceClamp || p[i] > 1.0 - kBceClamp) continue;
          const double y = labels[i];
          dp[i] += g * (-y / p[i] + (1.0 - y) / (1.0 - p[i])) / n;
        }
      },
      "BceLoss");
}

Var EmbeddingMax(Var table, std::span<const int> ids, std::size_t length,
                 int pad_id) {
  const Tensor& t = table.value();
  if (t.rank() != 2) ShapeError("EmbeddingMax", "table must be rank 2");
  if (length == 0 || ids.size() % length != 0) {
    ShapeError("EmbeddingMax", std::to_string(ids.size()) +
                                   " ids not divisible by length " +
                                   std::to_string(length));
  }
  const std::size_t vocab = t.dim(0), d = t.dim(1);
  const std::size_t nodes = ids.size() / length;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  Tensor out({nodes, d});
  // Source table row for every output element, kNone for all-pad nodes.
  std::vector<std::size_t> source(nodes * d, kNone);
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t k = 0; k < length; ++k) {
      const int id = ids[n * length + k];
      if (id == pad_id) continue;
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        ShapeError("EmbeddingMax", "token id " + std::to_string(id) +
                                       " outside vocabulary of " +
                                       std::to_string(vocab));
      }
      const std::size_t row = static_cast<std::size_t>(id);
      for (std::size_t j = 0; j < d; ++j) {
        std::size_t& src = source[n * d + j];
        if (src == kNone || t[row * d + j] > t[src * d + j]) src = row;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t src = source[n * d + j];
      if (src != kNone) out[n * d + j] = t[src * d + j];
    }
  }
  const std::size_t tid = table.id();
  return table.tape()->Record(
      std::move(out), {table},
      [tid, d, source = std::move(source)](Tape& tape, std::size_t self) {
        const Tensor& dy = tape.GradBuffer(self);
        Tensor& dt = tape.GradBuffer(tid);
        for (std::size_t i = 0; i < source.size(); ++i) {
          if (source[i] != kNone) dt[source[i] * d + i % d] += dy[i];
        }
      },
      "EmbeddingMax");
}

Var GatV2Aggregate(Var source, Var target, Var position, Var att,
                   std::span<const std::size_t> src,
                   std::span<const std::size_t> dst,
                   std::span<const std::size_t> pos, double slope) {
  RequireSameTape("GatV2Aggregate", source, target);
  RequireSameTape("GatV2Aggregate", source, position);
  RequireSameTape("GatV2Aggregate", source, att);
  const Tensor& xs = source.value();
  const Tensor& xt = target.value();
  const Tensor& pe = position.value();
  const Tensor& av = att.value();
  if (xs.rank() != 2 || xt.shape != xs.shape || pe.rank() != 2 ||
      pe.dim(1) != xs.dim(1) || av.size() != xs.dim(1)) {
    ShapeError("GatV2Aggregate",
               ShapeToString(xs.shape) + ", " + ShapeToString(xt.shape) + ", " +
                   ShapeToString(pe.shape) + ", " + ShapeToString(av.shape));
  }
  const std::size_t n = xs.dim(0), d = xs.dim(1), num_edges = src.size();
  if (dst.size() != num_edges || pos.size() != num_edges) {
    ShapeError("GatV2Aggregate", "edge arrays differ in length");
  }
  for (std::size_t e = 0; e < num_edges; ++e) {
    if (src[e] >= n || dst[e] >= n || pos[e] >= pe.dim(0)) {
      ShapeError("GatV2Aggregate", "edge " + std::to_string(e) + " out of range");
    }
  }

  // Scores, then softmax weights grouped by destination.
  std::vector<double> weight(num_edges);
  for (std::size_t e = 0; e < num_edges; ++e) {
    const double* a = &xs.data[src[e] * d];
    const double* b = &xt.data[dst[e] * d];
    const double* p = &pe.data[pos[e] * d];
    double score = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = a[j] + b[j] + p[j];
      score += av[j] * (z > 0 ? z : slope * z);
    }
    weight[e] = score;
  }
  std::vector<double> seg_max(n, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < num_edges; ++e) {
    seg_max[dst[e]] = std::max(seg_max[dst[e]], weight[e]);
  }
  std::vector<double> seg_sum(n, 0.0);
  for (std::size_t e = 0; e < num_edges; ++e) {
    weight[e] = std::exp(weight[e] - seg_max[dst[e]]);
    seg_sum[dst[e]] += weight[e];
  }
  Tensor out({n, d});
  for (std::size_t e = 0; e < num_edges; ++e) {
    weight[e] /= seg_sum[dst[e]];
    const double* a = &xs.data[src[e] * d];
    double* o = &out.data[dst[e] * d];
    for (std::size_t j = 0; j < d; ++j) o[j] += weight[e] * a[j];
  }

  const std::size_t sid = source.id(), tid = target.id(), pid = position.id(),
                    aid = att.id();
  return source.tape()->Record(
      std::move(out), {source, target, position, att},
      [sid, tid, pid, aid, n, d, slope, weight = std::move(weight),
       src = std::vector<std::size_t>(src.begin(), src.end()),
       dst = std::vector<std::size_t>(dst.begin(), dst.end()),
       pos = std::vector<std::size_t>(pos.begin(), pos.end())](
          Tape& tape, std::size_t self) {
        const Tensor& xs = tape.value(sid);
        const Tensor& xt = tape.value(tid);
        const Tensor& pe = tape.value(pid);
        const Tensor& av = tape.value(aid);
        const Tensor& dy = tape.GradBuffer(self);
        Tensor* dxs = tape.requires_grad(sid) ? &tape.GradBuffer(sid) : nullptr;
        Tensor* dxt = tape.requires_grad(tid) ? &tape.GradBuffer(tid) : nullptr;
        Tensor* dpe = tape.requires_grad(pid) ? &tape.GradBuffer(pid) : nullptr;
        Tensor* dav = tape.requires_grad(aid) ? &tape.GradBuffer(aid) : nullptr;
        const std::size_t num_edges = src.size();
        // d(loss)/d(weight) and the per-destination softmax correction.
        std::vector<double> dweight(num_edges);
        std::vector<double> dot(n, 0.0);
        for (std::size_t e = 0; e < num_edges; ++e) {
          const double* a = &xs.data[src[e] * d];
          const double* g = &dy.data[dst[e] * d];
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += g[j] * a[j];
          dweight[e] = acc;
          dot[dst[e]] += weight[e] * acc;
          if (dxs) {
            double* da = &dxs->data[src[e] * d];
            for (std::size_t j = 0; j < d; ++j) da[j] += weight[e] * g[j];
          }
        }
        for (std::size_t e = 0; e < num_edges; ++e) {
          const double dscore = weight[e] * (dweight[e] - dot[dst[e]]);
          const double* a = &xs.data[src[e] * d];
          const double* b = &xt.data[dst[e] * d];
          const double* p = &pe.data[pos[e] * d];
          double* da = dxs ? &dxs->data[src[e] * d] : nullptr;
          double* db = dxt ? &dxt->data[dst[e] * d] : nullptr;
          double* dp = dpe ? &dpe->data[pos[e] * d] : nullptr;
          for (std::size_t j = 0; j < d; ++j) {
            const double z = a[j] + b[j] + p[j];
            const double act = z > 0 ? z : slope * z;
            if (dav) (*dav)[j] += dscore * act;
            const double dz = dscore * av[j] * (z > 0 ? 1.0 : slope);
            if (da) da[j] += dz;
            if (db) db[j] += dz;
            if (dp) dp[j] += dz;
          }
        }
      },
      "GatV2Aggregate");
}

}  // namespace gbm::ad
