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

#include "g2st/autograd.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace g2st {

Tape::Id Tape::Leaf(const Matrix* value, Matrix* grad_sink) {
  Node n;
  n.external = value;
  n.grad_sink = grad_sink;
  n.requires_grad = record_ && grad_sink != nullptr;
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::Push(Matrix value, bool requires_grad, std::function<void(Tape&, Id)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Matrix& Tape::grad(Id id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad_sink) return *n.grad_sink;
  if (!n.grad_live) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad.setZero(v.rows(), v.cols());
    n.grad_live = true;
  }
  return n.grad;
}

void Tape::Backward(std::span<const std::pair<Id, Matrix>> seeds) {
  for (const auto& [id, g] : seeds) {
    if (!requires_grad(id)) continue;
    grad(id) += g;
  }
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad_live && n.backward) n.backward(*this, static_cast<Id>(i));
  }
}

namespace ops {

Id MatMul(Tape& t, Id a, Id b) {
  Matrix out = t.value(a) * t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(out), rg, [a, b](Tape& t, Id self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.requires_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  });
}

Id Linear(Tape& t, Id x, Id w, Id b) {
  Matrix out = t.value(x) * t.value(w);
  out.rowwise() += t.value(b).row(0);
  const bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  return t.Push(std::move(out), rg, [x, w, b](Tape& t, Id self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(x)) t.grad(x).noalias() += g * t.value(w).transpose();
    if (t.requires_grad(w)) t.grad(w).noalias() += t.value(x).transpose() * g;
    if (t.requires_grad(b)) t.grad(b).row(0) += g.colwise().sum();
  });
}

Id Add(Tape& t, Id a, Id b) {
  Matrix out = t.value(a) + t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(out), rg, [a, b](Tape& t, Id self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) += g;
  });
}

Id AddConstant(Tape& t, Id a, const Matrix& c) {
  Matrix out = t.value(a) + c;
  return t.Push(std::move(out), t.requires_grad(a), [a](Tape& t, Id self) {
    t.grad(a) += t.grad(self);
  });
}

Id Embedding(Tape& t, Id table, std::span<const std::int32_t> ids, double scale) {
  const Matrix& tab = t.value(table);
  Matrix out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]) * scale;
  }
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  return t.Push(std::move(out), t.requires_grad(table),
                [table, rows = std::move(rows), scale](Tape& t, Id self) {
                  const Matrix& g = t.grad(self);
                  Matrix& gt = t.grad(table);
                  for (std::size_t i = 0; i < rows.size(); ++i) {
                    gt.row(rows[i]) += scale * g.row(static_cast<Eigen::Index>(i));
                  }
                });
}

Id LayerNorm(Tape& t, Id x, Id gain, Id bias, double eps) {
  const Matrix& in = t.value(x);
  const Eigen::Index n = in.cols();
  auto xhat = std::make_shared<Matrix>(in.rows(), n);
  auto rstd = std::make_shared<Eigen::VectorXd>(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().mean();
    (*rstd)(r) = 1.0 / std::sqrt(var + eps);
    xhat->row(r) = (in.row(r).array() - mu) * (*rstd)(r);
  }
  Matrix out = xhat->array().rowwise() * t.value(gain).row(0).array();
  out.rowwise() += t.value(bias).row(0);
  const bool rg = t.requires_grad(x) || t.requires_grad(gain) || t.requires_grad(bias);
  return t.Push(std::move(out), rg, [x, gain, bias, xhat, rstd](Tape& t, Id self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(gain)) {
      t.grad(gain).row(0) += (g.array() * xhat->array()).colwise().sum().matrix();
    }
    if (t.requires_grad(bias)) t.grad(bias).row(0) += g.colwise().sum();
    if (t.requires_grad(x)) {
      const auto n = static_cast<double>(g.cols());
      Matrix dxhat = g.array().rowwise() * t.value(gain).row(0).array();
      Matrix& gx = t.grad(x);
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double mean_d = dxhat.row(r).sum() / n;
        const double mean_dx = dxhat.row(r).dot(xhat->row(r)) / n;
        gx.row(r).array() +=
            (*rstd)(r) * (dxhat.row(r).array() - mean_d - xhat->row(r).array() * mean_dx);
      }
    }
  });
}

Id Gelu(Tape& t, Id x) {
  static constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  static constexpr double kA = 0.044715;
  const Matrix& in = t.value(x);
  auto th = std::make_shared<Matrix>(in.rows(), in.cols());
  th->array() = (kC * (in.array() + kA * in.array().cube())).tanh();
  Matrix out = 0.5 * in.array() * (1.0 + th->array());
  return t.Push(std::move(out), t.requires_grad(x), [x, th](Tape& t, Id self) {
    const auto& xv = t.value(x).array();
    const auto& tv = th->array();
    t.grad(x).array() += t.grad(self).array() *
                         (0.5 * (1.0 + tv) +
                          0.5 * xv * (1.0 - tv.square()) * kC * (1.0 + 3.0 * kA * xv.square()));
  });
}

Id Dropout(Tape& t, Id x, double rate, DropoutRng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  const Matrix& in = t.value(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Matrix>(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < mask->size(); ++i) {
    mask->data()[i] = rng->Keep(rate) ? keep_scale : 0.0;
  }
  Matrix out = in.cwiseProduct(*mask);
  return t.Push(std::move(out), t.requires_grad(x), [x, mask](Tape& t, Id self) {
    t.grad(x) += t.grad(self).cwiseProduct(*mask);
  });
}

Id Attention(Tape& t, Id q, Id k, Id v, int heads, bool causal, double rate, DropoutRng* rng) {
  const Matrix& qv = t.value(q);
  const Matrix& kv = t.value(k);
  const Matrix& vv = t.value(v);
  const Eigen::Index rows = qv.rows();
  const Eigen::Index keys = kv.rows();
  const Eigen::Index dh = qv.cols() / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool use_dropout = rng != nullptr && rate > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - rate) : 1.0;

  // Per head: softmax weights, and the dropped/scaled weights actually used.
  auto weights = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(heads));
  auto used = std::make_shared<std::vector<Matrix>>(use_dropout ? static_cast<std::size_t>(heads) : 0);
  Matrix out(rows, qv.cols());
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index c0 = h * dh;
    Matrix scores = (qv.middleCols(c0, dh) * kv.middleCols(c0, dh).transpose()) * inv_sqrt;
    if (causal) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = i + 1; j < keys; ++j) {
          scores(i, j) = -std::numeric_limits<double>::infinity();
        }
      }
    }
    Matrix& a = (*weights)[static_cast<std::size_t>(h)];
    a = SoftmaxRows(scores);
    const Matrix* mix = &a;
    if (use_dropout) {
      Matrix& d = (*used)[static_cast<std::size_t>(h)];
      d = a;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        d.data()[i] *= rng->Keep(rate) ? keep_scale : 0.0;
      }
      mix = &d;
    }
    out.middleCols(c0, dh).noalias() = *mix * vv.middleCols(c0, dh);
  }
  const bool rg = t.requires_grad(q) || t.requires_grad(k) || t.requires_grad(v);
  return t.Push(std::move(out), rg,
                [q, k, v, heads, dh, inv_sqrt, keep_scale, weights, used](Tape& t, Id self) {
                  const Matrix& g = t.grad(self);
                  const Matrix& qv = t.value(q);
                  const Matrix& kv = t.value(k);
                  const Matrix& vv = t.value(v);
                  const bool dropped = !used->empty();
                  for (int h = 0; h < heads; ++h) {
                    const Eigen::Index c0 = h * dh;
                    const auto hs = static_cast<std::size_t>(h);
                    const Matrix& a = (*weights)[hs];
                    const Matrix& mix = dropped ? (*used)[hs] : a;
                    const auto gh = g.middleCols(c0, dh);
                    if (t.requires_grad(v)) {
                      t.grad(v).middleCols(c0, dh).noalias() += mix.transpose() * gh;
                    }
                    if (!t.requires_grad(q) && !t.requires_grad(k)) continue;
                    Matrix da = gh * vv.middleCols(c0, dh).transpose();
                    if (dropped) {
                      // used = a * mask * keep_scale elementwise.
                      for (Eigen::Index i = 0; i < da.size(); ++i) {
                        da.data()[i] *= mix.data()[i] != 0.0 ? keep_scale : 0.0;
                      }
                    }
                    Matrix ds = a.cwiseProduct(da);
                    const Eigen::VectorXd row_dot = ds.rowwise().sum();
                    ds -= a.cwiseProduct(row_dot.replicate(1, a.cols()));
                    ds *= inv_sqrt;
                    if (t.requires_grad(q)) {
                      t.grad(q).middleCols(c0, dh).noalias() += ds * kv.middleCols(c0, dh);
                    }
                    if (t.requires_grad(k)) {
                      t.grad(k).middleCols(c0, dh).noalias() += ds.transpose() * qv.middleCols(c0, dh);
                    }
                  }
                });
}

Id OutputLogits(Tape& t, Id h, Id w, Id b) {
  const Matrix& hv = t.value(h);
  const Matrix& wv = t.value(w);
  const Matrix& bv = t.value(b);
  const Eigen::Index d = hv.cols();
  Matrix out(hv.rows(), wv.rows());
  for (Eigen::Index r = 0; r < hv.rows(); ++r) {
    const double* hr = hv.row(r).data();
    for (Eigen::Index j = 0; j < wv.rows(); ++j) {
      const double* wr = wv.row(j).data();
      double s = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) s += hr[c] * wr[c];
      out(r, j) = s + bv(0, j);
    }
  }
  const bool rg = t.requires_grad(h) || t.requires_grad(w) || t.requires_grad(b);
  return t.Push(std::move(out), rg, [h, w, b](Tape& t, Id self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(h)) t.grad(h).noalias() += g * t.value(w);
    if (t.requires_grad(w)) t.grad(w).noalias() += g.transpose() * t.value(h);
    if (t.requires_grad(b)) t.grad(b).row(0) += g.colwise().sum();
  });
}

}  // namespace ops

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace g2st
