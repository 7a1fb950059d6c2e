#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "vidpop/nnkern.hpp"

using namespace vidpop;
using namespace vidpop::nn;
using vidpop::testing::add_into;
using vidpop::testing::as_vec;
using vidpop::testing::expect_code;
using vidpop::testing::input_param;
using vidpop::testing::random_vec;
using vidpop::testing::randomize;

// ---------------------------------------------------------------- softmax

TEST(Softmax, UniformForEqualLogits) {
  const Vec p = softmax(Vec{0, 0, 0});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LnTwoGivesTwoThirds) {
  const Vec p = softmax(Vec{std::log(2.0), 0.0});
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const Vec p = softmax(Vec{1000.0, 0.0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(p[1]));
}

TEST(Softmax, EmptyInput) {
  expect_code(ErrorCode::EmptyInput, [] { softmax(Vec{}); });
}

TEST(Softmax, PropertySumsToOneAndPositive) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_real_distribution<double> scale(0.1, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec x = random_vec(static_cast<std::size_t>(len(rng)), rng, scale(rng));
    const Vec p = softmax(x);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

// ---------------------------------------------------------------- LSTM

TEST(LstmStep, ZeroParamsZeroState) {
  LstmCell cell(3, 4, "cell");
  const LstmState s = lstm_step(Vec{0, 0, 0}, Vec(4, 0.0), Vec(4, 0.0), cell);
  for (double v : s.h) EXPECT_EQ(v, 0.0);
  for (double v : s.c) EXPECT_EQ(v, 0.0);
}

TEST(LstmStep, SaturatedGatesCarryCell) {
  std::mt19937_64 rng(3);
  LstmCell cell(3, 4, "cell");
  randomize(cell.params(), rng, 0.1);
  init_constant(cell.b[kForget], 20.0);
  init_constant(cell.b[kInput], -20.0);
  const Vec c_prev = random_vec(4, rng);
  const LstmState s = lstm_step(random_vec(3, rng), random_vec(4, rng), c_prev, cell);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s.c[j], c_prev[j], 1e-6);
}

TEST(LstmStep, GatesStayInRange) {
  std::mt19937_64 rng(5);
  LstmCell cell(5, 6, "cell");
  randomize(cell.params(), rng, 2.0);
  LstmStepCache cache;
  lstm_step(random_vec(5, rng, 3.0), random_vec(6, rng), random_vec(6, rng), cell, &cache);
  for (std::size_t g = 0; g < 3; ++g) {
    for (double v : cache.gate[g]) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(LstmStep, DimensionMismatch) {
  LstmCell cell(3, 4, "cell");
  expect_code(ErrorCode::ShapeError, [&] { lstm_step(Vec{0, 0}, Vec(4, 0.0), Vec(4, 0.0), cell); });
  expect_code(ErrorCode::ShapeError, [&] { lstm_step(Vec{0, 0, 0}, Vec(3, 0.0), Vec(4, 0.0), cell); });
}

// All eight weight matrices, the biases and the three inputs against central
// differences of L = r.h + q.c.
TEST(LstmStep, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t in = 2 + seed % 3, hd = 3 + seed % 2;
    LstmCell cell(in, hd, "cell");
    randomize(cell.params(), rng, 0.8);
    Param x = input_param("x", random_vec(in, rng));
    Param h0 = input_param("h0", random_vec(hd, rng));
    Param c0 = input_param("c0", random_vec(hd, rng));
    const Vec r = random_vec(hd, rng), q = random_vec(hd, rng);
    ParamRefs params = cell.params();
    params.insert(params.end(), {&x, &h0, &c0});

    auto loss = [&] {
      const LstmState s = lstm_step(as_vec(x), as_vec(h0), as_vec(c0), cell);
      return dot(r, s.h) + dot(q, s.c);
    };
    auto grad = [&] {
      zero_grads(params);
      LstmStepCache cache;
      lstm_step(as_vec(x), as_vec(h0), as_vec(c0), cell, &cache);
      const LstmStepGrad g = lstm_step_backward(cache, r, q, cell);
      add_into(x, g.dx);
      add_into(h0, g.dh_prev);
      add_into(c0, g.dc_prev);
    };
    const GradCheckReport rep = gradient_check(params, loss, grad);
    EXPECT_LE(rep.max_relative_error, 1e-4) << "seed " << seed << " worst " << rep.worst_param;
    EXPECT_EQ(rep.skipped, 0u);
  }
}

// ---------------------------------------------------------------- bi-LSTM

TEST(BiLstm, LengthOneShape) {
  std::mt19937_64 rng(1);
  BiLstm enc(3, 5, "enc");
  enc.init(rng);
  const auto out = bilstm_encode({Vec{1, 2, 3}}, enc);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].size(), 10u);
}

TEST(BiLstm, EmptySequence) {
  BiLstm enc(3, 5, "enc");
  expect_code(ErrorCode::EmptyInput, [&] { bilstm_encode({}, enc); });
}

TEST(BiLstm, ReversedInputWithSwappedDirectionsMirrors) {
  std::mt19937_64 rng(11);
  BiLstm enc(4, 3, "enc");
  randomize(enc.params(), rng, 0.7);
  std::vector<Vec> seq;
  for (int t = 0; t < 6; ++t) seq.push_back(random_vec(4, rng));
  const auto original = bilstm_encode(seq, enc);

  BiLstm swapped = enc;
  std::swap(swapped.forward, swapped.backward);
  std::vector<Vec> reversed(seq.rbegin(), seq.rend());
  const auto mirrored = bilstm_encode(reversed, swapped);

  const std::size_t L = seq.size(), H = 3;
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < H; ++j) {
      EXPECT_EQ(mirrored[t][H + j], original[L - 1 - t][j]);
      EXPECT_EQ(mirrored[t][j], original[L - 1 - t][H + j]);
    }
  }
}

TEST(BiLstm, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const std::size_t in = 3, hd = 3, len = 2 + seed;
    BiLstm enc(in, hd, "enc");
    randomize(enc.params(), rng, 0.6);
    std::vector<Param> xs;
    for (std::size_t t = 0; t < len; ++t) xs.push_back(input_param("x" + std::to_string(t), random_vec(in, rng)));
    std::vector<Vec> r;
    for (std::size_t t = 0; t < len; ++t) r.push_back(random_vec(2 * hd, rng));
    ParamRefs params = enc.params();
    for (auto& x : xs) params.push_back(&x);
    auto seq = [&] {
      std::vector<Vec> s;
      for (auto& x : xs) s.push_back(as_vec(x));
      return s;
    };
    auto loss = [&] {
      const auto out = bilstm_encode(seq(), enc);
      double l = 0.0;
      for (std::size_t t = 0; t < len; ++t) l += dot(r[t], out[t]);
      return l;
    };
    auto grad = [&] {
      zero_grads(params);
      const BiLstmTrace tr = bilstm_trace(seq(), enc);
      const auto dx = bilstm_backward(tr, r, enc);
      for (std::size_t t = 0; t < len; ++t) add_into(xs[t], dx[t]);
    };
    const GradCheckReport rep = gradient_check(params, loss, grad);
    EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param;
  }
}

// ---------------------------------------------------------------- attention

TEST(Attention, IdenticalInputsGiveUniformWeights) {
  std::mt19937_64 rng(2);
  AdditiveAttention att(4, 3, "att");
  att.init(rng);
  const Vec h = random_vec(4, rng);
  const auto r = attention_pool({h, h, h, h, h}, att);
  for (double w : r.weights) EXPECT_NEAR(w, 0.2, 1e-12);
}

TEST(Attention, DominantScoreTakesAlmostAllWeight) {
  // e_0 = 10 * tanh(100) ~ 10, all other e_t = 0.
  AdditiveAttention att(1, 1, "att");
  att.w.value[0] = 100.0;
  att.v.value[0] = 10.0;
  const auto r = attention_pool({Vec{1.0}, Vec{0.0}, Vec{0.0}, Vec{0.0}}, att);
  EXPECT_GT(r.weights[0], 0.99);
}

TEST(Attention, SingleStep) {
  std::mt19937_64 rng(3);
  AdditiveAttention att(3, 2, "att");
  att.init(rng);
  const Vec h = random_vec(3, rng);
  const auto r = attention_pool({h}, att);
  ASSERT_EQ(r.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(r.context[j], h[j]);
}

TEST(Attention, DimensionMismatch) {
  AdditiveAttention att(3, 2, "att");
  expect_code(ErrorCode::ShapeError, [&] { attention_pool({Vec{1, 2, 3}, Vec{1, 2}}, att); });
}

TEST(Attention, PropertyDistributionAndConvexHull) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + trial % 4, len = 1 + trial % 9;
    AdditiveAttention att(d, 3, "att");
    randomize(att.params(), rng, 2.0);
    std::vector<Vec> hs;
    for (std::size_t t = 0; t < len; ++t) hs.push_back(random_vec(d, rng, 3.0));
    const auto r = attention_pool(hs, att);
    double s = 0.0;
    for (double w : r.weights) {
      EXPECT_GE(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    for (std::size_t j = 0; j < d; ++j) {
      double lo = hs[0][j], hi = hs[0][j];
      for (const auto& h : hs) {
        lo = std::min(lo, h[j]);
        hi = std::max(hi, h[j]);
      }
      EXPECT_GE(r.context[j], lo - 1e-12);
      EXPECT_LE(r.context[j], hi + 1e-12);
    }
  }
}

TEST(Attention, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(200 + seed);
    const std::size_t d = 2 + seed % 3, len = 1 + seed;
    AdditiveAttention att(d, 3, "att");
    randomize(att.params(), rng, 1.0);
    std::vector<Param> hs;
    for (std::size_t t = 0; t < len; ++t) hs.push_back(input_param("h" + std::to_string(t), random_vec(d, rng)));
    const Vec r = random_vec(d, rng);
    ParamRefs params = att.params();
    for (auto& h : hs) params.push_back(&h);
    auto seq = [&] {
      std::vector<Vec> s;
      for (auto& h : hs) s.push_back(as_vec(h));
      return s;
    };
    auto loss = [&] { return dot(r, attention_pool(seq(), att).context); };
    auto grad = [&] {
      zero_grads(params);
      const auto s = seq();
      const auto res = attention_pool(s, att);
      const auto dh = attention_backward(s, res, r, att);
      for (std::size_t t = 0; t < len; ++t) add_into(hs[t], dh[t]);
    };
    const GradCheckReport rep = gradient_check(params, loss, grad);
    EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param;
  }
}

// ---------------------------------------------------------------- dense / conv

TEST(Dense, GradientMatchesFiniteDifferencesOverRandomShapes) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t in = 1 + rng() % 6, out = 1 + rng() % 5;
    Dense layer(in, out, "d");
    randomize(layer.params(), rng, 1.0);
    Param x = input_param("x", random_vec(in, rng));
    const Vec r = random_vec(out, rng);
    ParamRefs params = layer.params();
    params.push_back(&x);
    auto loss = [&] {
      const Vec y = layer.forward(as_vec(x));
      double l = 0.0;
      for (std::size_t i = 0; i < out; ++i) l += r[i] * std::tanh(y[i]);
      return l;
    };
    auto grad = [&] {
      zero_grads(params);
      const Vec y = layer.forward(as_vec(x));
      Vec dy(out);
      for (std::size_t i = 0; i < out; ++i) dy[i] = r[i] * (1.0 - std::tanh(y[i]) * std::tanh(y[i]));
      add_into(x, layer.backward(as_vec(x), dy));
    };
    EXPECT_LE(gradient_check(params, loss, grad).max_relative_error, 1e-4);
  }
}

TEST(Conv, PipelineGradientMatchesFiniteDifferences) {
  // conv -> relu -> maxpool -> gap, with kink-crossing perturbations skipped.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(300 + seed);
    Conv3x3 conv(2, 3, "conv");
    randomize(conv.params(), rng, 0.5);
    Param img("img", {2, 6, 6});
    randomize(img, rng, 1.0);
    const Vec r = random_vec(3, rng);
    ParamRefs params = conv.params();
    params.push_back(&img);
    KinkProbe probe;
    auto loss = [&] {
      const Tensor z = conv3x3_forward(img.value, conv);
      const MaxPoolResult mp = maxpool2_forward(relu_forward(z));
      probe = {};
      for (std::size_t i = 0; i < z.size(); ++i) {
        probe.pattern.push_back(z[i] > 0.0);
        probe.min_margin = std::min(probe.min_margin, std::abs(z[i]));
      }
      probe.pattern.insert(probe.pattern.end(), mp.argmax.begin(), mp.argmax.end());
      return dot(r, global_average_pool(mp.output));
    };
    auto grad = [&] {
      zero_grads(params);
      const Tensor z = conv3x3_forward(img.value, conv);
      const Tensor a = relu_forward(z);
      const MaxPoolResult mp = maxpool2_forward(a);
      const Tensor dpool = global_average_pool_backward(mp.output.shape(), r);
      const Tensor da = maxpool2_backward(a.shape(), mp, dpool);
      const Tensor dimg = conv3x3_backward(img.value, relu_backward(z, da), conv);
      for (std::size_t i = 0; i < dimg.size(); ++i) img.grad[i] += dimg[i];
    };
    const GradCheckReport rep = gradient_check(params, loss, grad, {}, [&] { return probe; });
    EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param;
    EXPECT_GT(rep.checked, params.size());
  }
}

// ---------------------------------------------------------------- gradient_check harness

namespace {

struct LinearModel {
  Param w{"w", {3}};
  Param b{"b", {1}};
  ParamRefs params() { return {&w, &b}; }
};

}  // namespace

TEST(GradientCheck, LinearSquaredLossIsExact) {
  std::mt19937_64 rng(12);
  LinearModel m;
  randomize(m.params(), rng, 1.0);
  std::vector<std::pair<Vec, double>> batch;
  for (int i = 0; i < 8; ++i) batch.emplace_back(random_vec(3, rng), random_vec(1, rng)[0]);
  auto predict = [&](const Vec& x) { return dot(m.w.value.values(), x) + m.b.value[0]; };
  auto loss = [&] {
    double l = 0.0;
    for (const auto& [x, y] : batch) l += 0.5 * (predict(x) - y) * (predict(x) - y);
    return l / static_cast<double>(batch.size());
  };
  auto grad = [&] {
    zero_grads(m.params());
    for (const auto& [x, y] : batch) {
      const double e = (predict(x) - y) / static_cast<double>(batch.size());
      for (std::size_t j = 0; j < 3; ++j) m.w.grad[j] += e * x[j];
      m.b.grad[0] += e;
    }
  };
  EXPECT_LE(gradient_check(m.params(), loss, grad).max_relative_error, 1e-7);
}

TEST(GradientCheck, DetectsCorruptedBackward) {
  std::mt19937_64 rng(13);
  Dense layer(4, 2, "d");
  randomize(layer.params(), rng, 1.0);
  const Vec x = random_vec(4, rng), r = random_vec(2, rng);
  auto loss = [&] { return dot(r, layer.forward(x)); };
  auto grad = [&] {
    zero_grads(layer.params());
    layer.backward(x, r);
    layer.weight.grad[3] *= 1.5;  // injected fault
  };
  EXPECT_GT(gradient_check(layer.params(), loss, grad).max_relative_error, 1e-2);
}

TEST(GradientCheck, RejectsEpsilonOutOfRange) {
  Dense layer(1, 1, "d");
  expect_code(ErrorCode::ConfigError, [&] {
    gradient_check(layer.params(), [] { return 0.0; }, [] {}, GradCheckOptions{1e-2});
  });
}

TEST(GradientCheck, NonFiniteLoss) {
  Dense layer(1, 1, "d");
  expect_code(ErrorCode::NumericalError, [&] {
    gradient_check(layer.params(), [] { return std::nan(""); }, [] {});
  });
}

TEST(GradientCheck, SoftmaxMlpWithReluKinks) {
  std::mt19937_64 rng(14);
  SoftmaxMlp mlp(5, 7, 3);
  Rng init(1);
  mlp.init(init);
  randomize(mlp.params(), rng, 0.8);
  std::vector<Example<Vec>> batch;
  for (int i = 0; i < 6; ++i) batch.push_back({random_vec(5, rng), i % 3});
  const auto rep = check_classifier_gradients<Vec>(mlp, batch);
  EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param;
}

// ---------------------------------------------------------------- training

namespace {

std::vector<Example<Vec>> gaussian_blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Example<Vec>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double c = label ? 2.0 : -2.0;
    out.push_back({Vec{c + noise(rng), c + noise(rng)}, label});
  }
  return out;
}

}  // namespace

TEST(TrainClassifier, SeparableBlobs) {
  const auto data = gaussian_blobs(400, 21);
  LogisticHead head(2);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.1;
  cfg.seed = 5;
  const auto hist = train_classifier(head, data, {}, cfg);
  EXPECT_GE(hist.epochs.back().accuracy, 0.99);
  EXPECT_EQ(hist.epochs.size(), 200u);
}

TEST(TrainClassifier, SameSeedIsBitIdentical) {
  const auto data = gaussian_blobs(100, 22);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 99;
  cfg.l2 = 1e-3;
  SoftmaxMlp a(2, 4, 2), b(2, 4, 2);
  const auto ha = train_classifier(a, data, data, cfg);
  const auto hb = train_classifier(b, data, data, cfg);
  EXPECT_EQ(ha.epochs, hb.epochs);
  const auto pa = a.params(), pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(TrainClassifier, EmptyDataset) {
  LogisticHead head(2);
  expect_code(ErrorCode::EmptyDataset, [&] { train_classifier(head, std::vector<Example<Vec>>{}, {}, TrainConfig{}); });
}

TEST(TrainClassifier, NanLossReportsEpoch) {
  LogisticHead head(1);
  std::vector<Example<Vec>> data{{Vec{std::nan("")}, 1}};
  try {
    train_classifier(head, data, {}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalError);
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
}

TEST(TrainClassifier, InvalidConfig) {
  LogisticHead head(1);
  std::vector<Example<Vec>> data{{Vec{1.0}, 1}};
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  expect_code(ErrorCode::ConfigError, [&] { train_classifier(head, data, {}, cfg); });
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  expect_code(ErrorCode::ConfigError, [&] { train_classifier(head, data, {}, cfg); });
}

TEST(TrainClassifier, KeepsBestValidationEpoch) {
  const auto data = gaussian_blobs(60, 23);
  LogisticHead head(2);
  TrainConfig cfg;
  cfg.epochs = 10;
  const auto hist = train_classifier(head, data, data, cfg);
  ASSERT_GE(hist.best_epoch, 0);
  double best = 0.0;
  for (const auto& e : hist.epochs) best = std::max(best, *e.val_accuracy);
  EXPECT_EQ(*hist.epochs[static_cast<std::size_t>(hist.best_epoch)].val_accuracy, best);
  EXPECT_DOUBLE_EQ((accuracy<LogisticHead, Vec>(head, data)), best);
}

// ---------------------------------------------------------------- checkpoint

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 rng(31);
  BiLstm enc(3, 2, "enc");
  randomize(enc.params(), rng, 1.0);
  const std::string bytes = encode_checkpoint([&] {
    std::vector<NamedTensor> t;
    for (Param* p : enc.params()) t.push_back({p->name, p->value});
    return t;
  }());
  BiLstm other(3, 2, "enc");
  assign_checkpoint(other.params(), decode_checkpoint(bytes));
  const auto a = enc.params(), b = other.params();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

TEST(Checkpoint, LayoutIsLittleEndian) {
  const std::string bytes = encode_checkpoint({{"ab", Tensor({1}, std::vector<double>{1.0})}});
  const std::string expected =
      std::string("NNK1") + std::string("\x02\x00\x00\x00", 4) + "ab" + std::string("\x01\x00\x00\x00", 4) +
      std::string("\x01\x00\x00\x00", 4) + std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8);
  EXPECT_EQ(bytes, expected);
}

TEST(Checkpoint, RejectsBadMagicTruncationAndShapeMismatch) {
  expect_code(ErrorCode::FormatError, [] { decode_checkpoint("NNK2"); });
  std::string bytes = encode_checkpoint({{"w", Tensor({2, 2}, 0.5)}});
  expect_code(ErrorCode::FormatError, [&] { decode_checkpoint(bytes.substr(0, bytes.size() - 3)); });
  Dense d(3, 2, "d");
  expect_code(ErrorCode::ShapeError, [&] { assign_checkpoint(d.params(), decode_checkpoint(bytes)); });
}
