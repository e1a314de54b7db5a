// Copyright 2026 The G2ST Toolkit Authors.
//
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

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// Every op appends a node holding its value and a closure that pushes the
// node's gradient to its inputs. Parameters enter as external leaves: the
// tape reads their value in place and accumulates their gradient straight
// into a caller-owned buffer, so binding a model costs no copies.

#ifndef G2ST_AUTOGRAD_HPP_
#define G2ST_AUTOGRAD_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace g2st {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape {
 public:
  using Id = int;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  // `grad_sink` may be null for a read-only leaf.
  Id Leaf(const Matrix* value, Matrix* grad_sink);
  Id Constant(Matrix value);
  // `backward` receives the tape and the id of the pushed node.
  Id Push(Matrix value, bool requires_grad, std::function<void(Tape&, Id)> backward);

  const Matrix& value(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  // Gradient buffer for `id`, zero-initialized on first access.
  Matrix& grad(Id id);

  // Seeds the given node gradients, then runs closures in reverse order.
  void Backward(std::span<const std::pair<Id, Matrix>> seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Matrix* grad_sink = nullptr;
    bool grad_live = false;
    bool requires_grad = false;
    std::function<void(Tape&, Id)> backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Source of dropout masks. A null pointer or a zero rate means no dropout.
class DropoutRng {
 public:
  explicit DropoutRng(std::uint64_t seed) : engine_(seed) {}
  // True when the unit is kept.
  bool Keep(double rate) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 >= rate; }

 private:
  std::mt19937_64 engine_;
};

namespace ops {

using Id = Tape::Id;

Id MatMul(Tape& t, Id a, Id b);
// x * w + b, with b a 1 x out row broadcast over rows.
Id Linear(Tape& t, Id x, Id w, Id b);
Id Add(Tape& t, Id a, Id b);
// Adds a constant matrix of the same shape.
Id AddConstant(Tape& t, Id a, const Matrix& c);
// Rows of `table` selected by `ids`, multiplied by `scale`.
Id Embedding(Tape& t, Id table, std::span<const std::int32_t> ids, double scale);
Id LayerNorm(Tape& t, Id x, Id gain, Id bias, double eps = 1e-5);
// tanh-approximated GELU.
Id Gelu(Tape& t, Id x);
// Inverted dropout: kept units are scaled by 1 / (1 - rate).
Id Dropout(Tape& t, Id x, double rate, DropoutRng* rng);
// Scaled dot-product attention over `heads` equal column slices. With
// `causal`, query row i attends to key rows <= i. Attention weights are
// dropped out at `rate` after the softmax.
Id Attention(Tape& t, Id q, Id k, Id v, int heads, bool causal, double rate, DropoutRng* rng);
// logits(r, j) = dot(h.row(r), w.row(j)) + b(j) with w stored V x d. Each
// entry is computed by the same fixed-order dot product, independent of V.
Id OutputLogits(Tape& t, Id h, Id w, Id b);

}  // namespace ops

// Row-wise numerically stable log-softmax.
Matrix LogSoftmaxRows(const Matrix& logits);
Matrix SoftmaxRows(const Matrix& logits);

}  // namespace g2st

#endif  // G2ST_AUTOGRAD_HPP_
