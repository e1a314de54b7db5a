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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "g2st/autograd.hpp"
#include "g2st/common.hpp"
#include "g2st/model.hpp"
#include "g2st/training.hpp"
#include "test_util.hpp"

using g2st::Matrix;
using g2st::ModelConfig;
using g2st::TokenId;

namespace {

ModelConfig Tiny(int vocab = 50, double dropout = 0.1) {
  ModelConfig c;
  c.d_model = 16;
  c.n_heads = 4;
  c.n_layers_enc = 1;
  c.n_layers_dec = 1;
  c.ffn_dim = 32;
  c.dropout_rate = dropout;
  c.max_seq_len = 16;
  c.vocab_size = vocab;
  return c;
}

std::vector<TokenId> RandomIds(std::mt19937_64& rng, std::size_t n, int vocab) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(4 + rng() % static_cast<std::uint64_t>(vocab - 4));
  return ids;
}

double MaxAbsDiff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("config validation") {
    auto c = Tiny();
    CHECK(c.head_dim() == 4);
    c.n_heads = 3;
    try {
      c.Validate();
      FAIL("expected an error");
    } catch (const g2st::Error& e) {
      CHECK(e.code() == g2st::ErrorCode::kConfig);
    }
    CHECK(ModelConfig::FromJson(Tiny().ToJson()) == Tiny());
  }

  TEST_CASE("initialization is deterministic and float-exact") {
    const auto a = g2st::InitModel(Tiny(), 7);
    const auto b = g2st::InitModel(Tiny(), 7);
    const auto c = g2st::InitModel(Tiny(), 8);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (const auto& t : a.tensors()) {
      for (Eigen::Index i = 0; i < t.value.size(); ++i) {
        const double v = t.value.data()[i];
        CHECK(static_cast<double>(static_cast<float>(v)) == v);
      }
    }
    CHECK(a.at("enc.0.attn.bq").isZero());
  }

  TEST_CASE("initial weight scale is 1/sqrt(d_model)") {
    ModelConfig c = Tiny();
    c.d_model = 64;
    c.ffn_dim = 64;
    const auto p = g2st::InitModel(c, 1);
    const Matrix& w = p.at("enc.0.attn.wq");
    const double mean = w.mean();
    const double var = (w.array() - mean).square().mean();
    CHECK(std::sqrt(var) == doctest::Approx(1.0 / 8.0).epsilon(0.05));
  }

  TEST_CASE("forward rows are distributions and dropout-off forward is deterministic") {
    const auto p = g2st::InitModel(Tiny(), 3);
    std::mt19937_64 rng(1);
    const auto src = RandomIds(rng, 7, 50);
    const auto tgt = RandomIds(rng, 5, 50);
    const auto a = g2st::Forward(p, src, tgt, {0, false});
    const auto b = g2st::Forward(p, src, tgt, {0, false});
    CHECK(a.probs == b.probs);
    REQUIRE(a.rows() == 5);
    for (Eigen::Index r = 0; r < a.probs.rows(); ++r) {
      CHECK(std::abs(a.probs.row(r).sum() - 1.0) < 1e-6);
      CHECK(a.probs.row(r).minCoeff() >= 0.0);
    }
  }

  TEST_CASE("fresh model output entropy is close to ln V") {
    const auto p = g2st::InitModel(Tiny(), 11);
    std::mt19937_64 rng(2);
    const auto d = g2st::Forward(p, RandomIds(rng, 6, 50), RandomIds(rng, 6, 50), {0, false});
    for (Eigen::Index r = 0; r < d.probs.rows(); ++r) {
      double h = 0.0;
      for (Eigen::Index j = 0; j < d.probs.cols(); ++j) {
        const double q = d.probs(r, j);
        if (q > 0) h -= q * std::log(q);
      }
      CHECK(h == doctest::Approx(std::log(50.0)).epsilon(0.2));
    }
  }

  TEST_CASE("decoder is causal") {
    const auto p = g2st::InitModel(Tiny(), 4);
    std::mt19937_64 rng(5);
    const auto src = RandomIds(rng, 6, 50);
    auto tgt = RandomIds(rng, 8, 50);
    const Matrix before = g2st::ForwardLogits(p, src, tgt, {0, false});
    for (std::size_t t = 0; t < tgt.size(); ++t) {
      auto changed = tgt;
      changed[t] = static_cast<TokenId>(4 + (changed[t] - 4 + 1) % 46);
      const Matrix after = g2st::ForwardLogits(p, src, changed, {0, false});
      for (std::size_t r = 0; r < t; ++r) {
        CHECK(after.row(static_cast<Eigen::Index>(r)) == before.row(static_cast<Eigen::Index>(r)));
      }
      CHECK(after.row(static_cast<Eigen::Index>(t)) != before.row(static_cast<Eigen::Index>(t)));
    }
  }

  TEST_CASE("dual forward: differs with dropout, equal without, repeatable") {
    std::mt19937_64 rng(6);
    const auto src = RandomIds(rng, 6, 50);
    const auto tgt = RandomIds(rng, 6, 50);
    const auto p = g2st::InitModel(Tiny(50, 0.1), 1);
    const auto [a1, a2] = g2st::DualForward(p, src, tgt, 9);
    CHECK(MaxAbsDiff(a1.probs, a2.probs) > 0.0);
    const auto [b1, b2] = g2st::DualForward(p, src, tgt, 9);
    CHECK(a1.probs == b1.probs);
    CHECK(a2.probs == b2.probs);

    const auto q = g2st::InitModel(Tiny(50, 0.0), 1);
    const auto [c1, c2] = g2st::DualForward(q, src, tgt, 9);
    CHECK(c1.probs == c2.probs);
  }

  TEST_CASE("input validation") {
    const auto p = g2st::InitModel(Tiny(), 1);
    std::vector<TokenId> ok = {4, 5};
    std::vector<TokenId> too_long(17, 4);
    std::vector<TokenId> bad_id = {4, 50};
    CHECK_THROWS_AS(g2st::Forward(p, too_long, ok, {0, false}), g2st::Error);
    try {
      g2st::Forward(p, ok, bad_id, {0, false});
      FAIL("expected an error");
    } catch (const g2st::Error& e) {
      CHECK(e.code() == g2st::ErrorCode::kOutOfRange);
    }
  }

  TEST_CASE("resize keeps old rows and old-vocabulary logits bit-exact") {
    const auto p = g2st::InitModel(Tiny(), 2);
    CHECK(g2st::ResizeEmbeddings(p, 50, g2st::EmbeddingInit::kMean, 1) == p);
    CHECK_THROWS_AS(g2st::ResizeEmbeddings(p, 49, g2st::EmbeddingInit::kMean, 1), g2st::Error);
    for (auto init : {g2st::EmbeddingInit::kMean, g2st::EmbeddingInit::kRandom}) {
      const auto big = g2st::ResizeEmbeddings(p, 60, init, 1);
      CHECK(big.config().vocab_size == 60);
      CHECK(big.at("embed").topRows(50) == p.at("embed"));
      CHECK(big.at("out.w").topRows(50) == p.at("out.w"));
      CHECK(big.at("out.b").leftCols(50) == p.at("out.b"));
      std::mt19937_64 rng(3);
      const auto src = RandomIds(rng, 5, 50);
      const auto tgt = RandomIds(rng, 4, 50);
      const Matrix before = g2st::ForwardLogits(p, src, tgt, {0, false});
      const Matrix after = g2st::ForwardLogits(big, src, tgt, {0, false});
      CHECK(after.leftCols(50) == before);
      // Probabilities over old tokens change only through renormalization.
      const auto pb = g2st::Forward(p, src, tgt, {0, false});
      const auto pa = g2st::Forward(big, src, tgt, {0, false});
      for (Eigen::Index r = 0; r < pa.probs.rows(); ++r) {
        const double mass = pa.probs.row(r).leftCols(50).sum();
        CHECK(MaxAbsDiff(pa.probs.row(r).leftCols(50) / mass, pb.probs.row(r)) < 1e-12);
      }
    }
    // Mean init stays near the mean of the old rows.
    const auto big = g2st::ResizeEmbeddings(p, 51, g2st::EmbeddingInit::kMean, 1);
    const Matrix mean = p.at("embed").colwise().mean();
    CHECK(MaxAbsDiff(big.at("embed").row(50), mean) < 0.1);
  }

  TEST_CASE("greedy decoding stops on eos and is deterministic") {
    auto p = g2st::InitModel(Tiny(), 5);
    std::mt19937_64 rng(4);
    const auto src = RandomIds(rng, 5, 50);
    CHECK(g2st::GreedyDecode(p, src, 10) == g2st::GreedyDecode(p, src, 10));
    CHECK(g2st::GreedyDecode(p, src, 10).size() <= 10);
    p.at("out.w").setZero();
    p.at("out.b").setZero();
    p.at("out.b")(0, g2st::Tokenizer::kEos) = 10.0;
    CHECK(g2st::GreedyDecode(p, src, 10).empty());
    // All-equal logits: ties go to the smallest id, which is unk (0).
    p.at("out.b").setZero();
    const auto out = g2st::GreedyDecode(p, src, 3);
    CHECK(out == std::vector<TokenId>{0, 0, 0});
  }

  TEST_CASE("checkpoint round trip is bit-exact") {
    g2st::testing::TempDir dir;
    const auto p = g2st::InitModel(Tiny(), 12);
    g2st::SaveCheckpoint(p, dir / "m.ckpt", {{"seed", 12}});
    nlohmann::json meta;
    const auto back = g2st::LoadCheckpoint(dir / "m.ckpt", &meta);
    CHECK(back == p);
    CHECK(meta.at("seed") == 12);
    CHECK(g2st::SerializeCheckpoint(back, {{"seed", 12}}) == g2st::SerializeCheckpoint(p, {{"seed", 12}}));
    const std::string bytes = g2st::SerializeCheckpoint(p, {});
    CHECK(bytes.substr(0, 8) == "G2STCKPT");
    CHECK_THROWS_AS(g2st::ParseCheckpoint(bytes.substr(0, bytes.size() - 1)), g2st::Error);
    CHECK_THROWS_AS(g2st::ParseCheckpoint("nonsense"), g2st::Error);
  }

  TEST_CASE("analytic gradients match central differences") {
    const auto base = g2st::InitModel(Tiny(50, 0.0), 21);
    std::mt19937_64 rng(8);
    std::vector<g2st::EncodedExample> batch_data;
    for (int i = 0; i < 2; ++i) {
      g2st::EncodedExample ex;
      ex.src = RandomIds(rng, 5, 50);
      ex.src.push_back(g2st::Tokenizer::kEos);
      const auto y = RandomIds(rng, 4, 50);
      ex.tgt_in = {g2st::Tokenizer::kBos};
      ex.tgt_in.insert(ex.tgt_in.end(), y.begin(), y.end());
      ex.tgt_out = y;
      ex.tgt_out.push_back(g2st::Tokenizer::kEos);
      batch_data.push_back(ex);
    }
    std::vector<const g2st::EncodedExample*> batch = {&batch_data[0], &batch_data[1]};
    auto grads = g2st::ZeroGradients(base);
    g2st::BatchObjective(base, batch, 0.0, 0.05, true, 1, &grads);

    auto params = base;
    auto loss_at = [&] {
      return g2st::BatchObjective(params, batch, 0.0, 0.05, true, 1, nullptr).total;
    };
    const double h = 1e-4;
    int checked = 0;
    double worst = 0.0;
    for (std::size_t ti = 0; ti < params.tensors().size(); ++ti) {
      Matrix& w = params.mutable_tensors()[ti].value;
      for (int k = 0; k < 3; ++k) {
        const auto idx = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.size()));
        const double orig = w.data()[idx];
        w.data()[idx] = orig + h;
        const double up = loss_at();
        w.data()[idx] = orig - h;
        const double down = loss_at();
        w.data()[idx] = orig;
        const double fd = (up - down) / (2 * h);
        const double an = grads[ti].data()[idx];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) continue;
        worst = std::max(worst, std::abs(fd - an) / denom);
        ++checked;
      }
    }
    CHECK(checked > 30);
    CHECK(worst < 1e-3);
  }
}

TEST_SUITE("autograd") {
  TEST_CASE("softmax helpers") {
    Matrix z(1, 3);
    z << 1000.0, 1000.0, 1000.0;
    const Matrix p = g2st::SoftmaxRows(z);
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
    const Matrix lp = g2st::LogSoftmaxRows(z);
    CHECK(lp(0, 2) == doctest::Approx(-std::log(3.0)));
  }

  TEST_CASE("matmul and layer norm gradients by finite differences") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(3, 4), b(4, 2), g(1, 2), beta(1, 2);
    for (Matrix* m : {&a, &b, &g, &beta}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
    }
    Matrix ga = Matrix::Zero(3, 4), gb = Matrix::Zero(4, 2), gg = Matrix::Zero(1, 2),
           gbeta = Matrix::Zero(1, 2);
    Matrix weights(3, 2);
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = n(rng);
    auto run = [&](bool grad) {
      g2st::Tape t;
      const auto ia = t.Leaf(&a, grad ? &ga : nullptr);
      const auto ib = t.Leaf(&b, grad ? &gb : nullptr);
      const auto ig = t.Leaf(&g, grad ? &gg : nullptr);
      const auto ibeta = t.Leaf(&beta, grad ? &gbeta : nullptr);
      const auto y = g2st::ops::Gelu(t, g2st::ops::LayerNorm(t, g2st::ops::MatMul(t, ia, ib), ig, ibeta));
      const double loss = (t.value(y).array() * weights.array()).sum();
      if (grad) {
        std::vector<std::pair<g2st::Tape::Id, Matrix>> seeds;
        seeds.emplace_back(y, weights);
        t.Backward(seeds);
      }
      return loss;
    };
    run(true);
    const double h = 1e-5;
    for (auto [m, gm] : {std::pair{&a, &ga}, std::pair{&b, &gb}, std::pair{&g, &gg}, std::pair{&beta, &gbeta}}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) {
        const double orig = m->data()[i];
        m->data()[i] = orig + h;
        const double up = run(false);
        m->data()[i] = orig - h;
        const double down = run(false);
        m->data()[i] = orig;
        CHECK(gm->data()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("inverted dropout scales kept units") {
    g2st::Tape t;
    Matrix x = Matrix::Ones(200, 50);
    const auto ix = t.Constant(x);
    g2st::DropoutRng rng(4);
    const Matrix& y = t.value(g2st::ops::Dropout(t, ix, 0.2, &rng));
    int kept = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double v = y.data()[i];
      CHECK((v == 0.0 || std::abs(v - 1.25) < 1e-15));
      kept += v != 0.0;
    }
    CHECK(kept / 10000.0 == doctest::Approx(0.8).epsilon(0.03));
    const Matrix& same = t.value(g2st::ops::Dropout(t, ix, 0.0, &rng));
    CHECK(same == x);
  }
}
