#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>

#include "jscc/baseline.hpp"
#include "jscc/conv.hpp"
#include "jscc/nets.hpp"
#include "jscc/network.hpp"
#include "support.hpp"

using namespace jscc;

namespace {

// Direct "same"-padded correlation, independent of im2col.
std::vector<double> naive_conv(const std::vector<double>& in, int C, int H, int W, const std::vector<double>& w,
                               const std::vector<double>& b, int K, int F, int S) {
  const int Ho = (H + S - 1) / S, Wo = (W + S - 1) / S;
  const int pad_h = std::max((Ho - 1) * S + F - H, 0) / 2, pad_w = std::max((Wo - 1) * S + F - W, 0) / 2;
  std::vector<double> out(static_cast<std::size_t>(K) * Ho * Wo);
  for (int k = 0; k < K; ++k)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        double s = b[k];
        for (int c = 0; c < C; ++c)
          for (int i = 0; i < F; ++i)
            for (int j = 0; j < F; ++j) {
              const int iy = y * S - pad_h + i, ix = x * S - pad_w + j;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              s += w[((k * C + c) * F + i) * F + j] * in[(c * H + iy) * W + ix];
            }
        out[(k * Ho + y) * Wo + x] = s;
      }
  return out;
}

// Scatter form of the transposed convolution.
std::vector<double> naive_tconv(const std::vector<double>& in, int C, int H, int W, const std::vector<double>& w,
                                const std::vector<double>& b, int K, int F, int S) {
  const int Ho = H * S, Wo = W * S;
  const int pad_h = std::max((H - 1) * S + F - Ho, 0) / 2, pad_w = std::max((W - 1) * S + F - Wo, 0) / 2;
  std::vector<double> out(static_cast<std::size_t>(K) * Ho * Wo);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < Ho * Wo; ++p) out[k * Ho * Wo + p] = b[k];
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int k = 0; k < K; ++k)
          for (int i = 0; i < F; ++i)
            for (int j = 0; j < F; ++j) {
              const int oy = y * S - pad_h + i, ox = x * S - pad_w + j;
              if (oy < 0 || oy >= Ho || ox < 0 || ox >= Wo) continue;
              out[(k * Ho + oy) * Wo + ox] += w[((c * K + k) * F + i) * F + j] * in[(c * H + y) * W + x];
            }
  return out;
}

std::vector<double> randv(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

RunSpec cifar_spec() { return RunSpec::make("t", 32, 32, 3, 1.0 / 6.0, 10.0); }

}  // namespace

TEST(Conv, MatchesDirectCorrelation) {
  std::mt19937_64 rng(1);
  for (auto [H, W, F, S] : {std::tuple{7, 9, 3, 1}, std::tuple{8, 8, 5, 2}, std::tuple{9, 6, 4, 2},
                            std::tuple{5, 5, 4, 1}}) {
    const int C = 2, K = 3;
    const auto in = randv(C * H * W, rng), w = randv(K * C * F * F, rng), b = randv(K, rng);
    const int Ho = (H + S - 1) / S, Wo = (W + S - 1) / S;
    const auto g = PatchGeometry::same(C, H, W, Ho, Wo, F, S, S);
    std::vector<double> out(K * Ho * Wo), scratch;
    conv_forward<double>(g, K, w, b, in.data(), out.data(), scratch);
    const auto ref = naive_conv(in, C, H, W, w, b, K, F, S);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12) << H << "x" << W << " F" << F;
  }
}

TEST(Conv, TransposedMatchesScatter) {
  std::mt19937_64 rng(2);
  for (auto [H, W, F, S] : {std::tuple{4, 5, 3, 2}, std::tuple{6, 6, 3, 1}, std::tuple{3, 4, 4, 2}}) {
    const int C = 3, K = 2;
    const auto in = randv(C * H * W, rng), w = randv(C * K * F * F, rng), b = randv(K, rng);
    const auto g = PatchGeometry::same(K, H * S, W * S, H, W, F, S, S);
    std::vector<double> out(K * H * S * W * S), scratch;
    tconv_forward<double>(g, C, w, b, in.data(), out.data(), scratch);
    const auto ref = naive_tconv(in, C, H, W, w, b, K, F, S);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
  }
}

TEST(Encoder, OutputShapes) {
  for (int side : {32, 256}) {
    const auto spec = RunSpec::make("t", side, side, 3, 1.0 / 6.0, 10.0);
    const auto out = build_encoder(spec).output_shape();
    EXPECT_EQ(out.height, side / 2);
    EXPECT_EQ(out.width, side / 2);
    EXPECT_EQ(out.channels, spec.encoder_channels);
    EXPECT_EQ(static_cast<std::int64_t>(out.height) * out.width * out.channels, 2 * spec.effective_symbols);
  }
}

TEST(Generator, OutputShapeAndSkipChannels) {
  for (int side : {32, 256}) {
    const auto spec = RunSpec::make("t", side, side, 3, 1.0 / 12.0, 10.0);
    const auto net = build_generator(spec);
    const auto out = net.output_shape();
    EXPECT_EQ(out.height, side);
    EXPECT_EQ(out.width, side);
    EXPECT_EQ(out.channels, 3);
    const auto r = net.resolve();
    for (const char* name : {"tconv3", "tconv4", "tconv5"}) {
      const auto& layer = r[net.find_layer(name)];
      EXPECT_EQ(layer.in_channels, 128) << name;
      EXPECT_EQ(layer.skip_channels, 64) << name;
    }
    EXPECT_EQ(r[net.find_layer("tconv2")].in_channels, 64);
    // The deepest features sit at one eighth of the image side.
    EXPECT_EQ(r[net.find_layer("conv3")].out_h, side / 8);
  }
}

TEST(Generator, RejectsUnsupportedSides) {
  EXPECT_THROW(build_generator(RunSpec::make("t", 12, 12, 3, 0.5, 10.0)), ConfigError);
  EXPECT_THROW(build_generator(RunSpec::make("t", 16, 16, 3, 0.5, 10.0)), ConfigError);
  ArchOptions toy;
  toy.min_feature_side = 1;
  EXPECT_NO_THROW(build_generator(RunSpec::make("t", 8, 8, 3, 0.5, 10.0), toy));
}

TEST(Generator, SigmoidOutputInUnitRange) {
  const auto spec = cifar_spec();
  Network<float> g(build_generator(spec));
  Rng rng = make_rng(3, "init/decoder");
  g.initialize(rng);
  auto& p = g.params();
  // Large biases push the pre-activation far out; outputs must stay in [0, 1].
  for (std::size_t i = 0; i < p.names.size(); ++i)
    if (p.names[i].find("/bias") != std::string::npos)
      for (auto& v : p.tensors[i]) v = 40.f;
  std::mt19937_64 r(4);
  Tensor<float> in(g.input_tensor_shape(2));
  std::normal_distribution<float> nd(0.f, 3.f);
  for (auto& v : in.values()) v = nd(r);
  const auto out = g.forward(in);
  EXPECT_EQ(out.shape(), (Shape{2, 3, 32, 32}));
  for (float v : out.values()) {
    EXPECT_GE(v, 0.f);
    EXPECT_LE(v, 1.f);
  }
}

TEST(Generator, SkipsChangeTheOutput) {
  const auto spec = cifar_spec();
  Network<double> g(build_generator(spec));
  Rng rng = make_rng(5, "init/decoder");
  g.initialize(rng);
  std::mt19937_64 r(6);
  Tensor<double> in(g.input_tensor_shape(1));
  for (auto& v : in.values()) v = std::normal_distribution<double>(0.0, 1.0)(r);
  const auto with = g.forward(in);
  const auto without = g.forward(in, nullptr, true);
  double diff = 0.0;
  for (std::size_t i = 0; i < with.size(); ++i) diff = std::max(diff, std::abs(with[i] - without[i]));
  EXPECT_GT(diff, 1e-9);
}

TEST(Network, RejectsWrongInputShape) {
  Network<float> e(build_encoder(cifar_spec()));
  EXPECT_THROW(e.forward(Tensor<float>(Shape{1, 3, 32, 30})), ShapeError);
  try {
    e.forward(Tensor<float>(Shape{1, 1, 32, 32}));
    FAIL();
  } catch (const ShapeError& err) {
    EXPECT_NE(std::string(err.what()).find("encoder/conv1"), std::string::npos);
  }
}

TEST(Network, RejectsBadSkipSources) {
  NetworkSpec net;
  net.name = "toy";
  net.input_shape = {8, 8, 2};
  net.layers = {{"a", LayerKind::conv, 3, 4, 2, 2, Activation::relu, {}},
                {"b", LayerKind::conv, 3, 4, 1, 1, Activation::relu, "missing"}};
  EXPECT_THROW(net.resolve(), ShapeError);
  net.layers[1].skip_source = "b";
  EXPECT_THROW(net.resolve(), ShapeError);
  net.layers.insert(net.layers.begin(), {"z", LayerKind::conv, 3, 4, 1, 1, Activation::relu, {}});
  net.layers[2].skip_source = "z";  // 8x8 feeding a 4x4 input
  EXPECT_THROW(net.resolve(), ShapeError);
}

TEST(Network, InitializationIsTruncatedAndSeeded) {
  Network<float> a(build_encoder(cifar_spec())), b(build_encoder(cifar_spec()));
  Rng r1 = make_rng(7, "init/encoder"), r2 = make_rng(7, "init/encoder");
  a.initialize(r1);
  b.initialize(r2);
  EXPECT_TRUE(a.params() == b.params());
  const auto& s = a.slots();
  for (const auto& sl : s) {
    for (float v : a.params().tensors[sl.weight]) EXPECT_LE(std::abs(v), 2 * kInitStddev + 1e-7);
    for (float v : a.params().tensors[sl.bias]) EXPECT_EQ(v, 0.f);
    ASSERT_GE(sl.alpha, 0);
    for (float v : a.params().tensors[sl.alpha]) EXPECT_FLOAT_EQ(v, 0.25f);
  }
}

TEST(Discriminator, ScoreMapShapesAndRange) {
  for (int side : {32, 256}) {
    Network<float> d(build_discriminator({side, side, 3}));
    const auto out = d.spec().output_shape();
    EXPECT_EQ(out.height, side / 8);
    EXPECT_EQ(out.channels, 1);
    if (side != 32) continue;
    Rng rng = make_rng(8, "init/discriminator");
    d.initialize(rng);
    const auto x = test::random_pixels(2, 3, 32, 32, 9);
    const auto map = d.forward_images(x);
    for (float v : map.values()) {
      EXPECT_GT(v, 0.f);
      EXPECT_LT(v, 1.f);
    }
    for (float p : discriminator_decisions(map)) {
      EXPECT_GT(p, 0.f);
      EXPECT_LT(p, 1.f);
    }
  }
  EXPECT_THROW(build_discriminator({16, 16, 3}), ConfigError);
}

TEST(Discriminator, DecisionIsPatchMean) {
  const std::vector<double> m{0.2, 0.4, 0.6, 0.8};
  EXPECT_DOUBLE_EQ(discriminator_decision<double>(std::span<const double>(m)), 0.5);
  const std::vector<double> one{0.3};
  EXPECT_DOUBLE_EQ(discriminator_decision<double>(one), 0.3);
  EXPECT_THROW(discriminator_decision<double>(std::span<const double>{}), ShapeError);
  Tensor<double> maps(Shape{2, 1, 1, 2});
  maps[0] = 0.1, maps[1] = 0.3, maps[2] = 0.9, maps[3] = 0.5;
  const auto d = discriminator_decisions(maps);
  EXPECT_DOUBLE_EQ(d[0], 0.2);
  EXPECT_DOUBLE_EQ(d[1], 0.7);
}

TEST(Baseline, MirrorsEncoderWithoutSkips) {
  const auto spec = cifar_spec();
  auto [enc, dec] = build_baseline(spec);
  EXPECT_EQ(enc.layers.size(), 5u);
  EXPECT_EQ(dec.layers.size(), 5u);
  for (const auto& l : dec.layers) {
    EXPECT_EQ(l.kind, LayerKind::transposed_conv);
    EXPECT_FALSE(l.skip_source.has_value());
  }
  const auto out = dec.output_shape();
  EXPECT_EQ(out.height, 32);
  EXPECT_EQ(out.channels, 3);
  EXPECT_EQ(dec.layers.back().activation, Activation::sigmoid);
}

TEST(Network, BackwardMatchesFiniteDifferences) {
  // Small net covering stride 2, a skip, every activation and both layer kinds.
  NetworkSpec net;
  net.name = "toy";
  net.input_shape = {6, 6, 2};
  net.layers = {{"c1", LayerKind::conv, 3, 3, 2, 2, Activation::prelu, {}},
                {"c2", LayerKind::conv, 3, 3, 1, 1, Activation::leaky_relu, {}},
                {"t1", LayerKind::transposed_conv, 3, 2, 2, 2, Activation::relu, {}},
                {"t2", LayerKind::transposed_conv, 3, 2, 1, 1, Activation::sigmoid, "t1"},
                {"c3", LayerKind::conv, 2, 2, 1, 1, Activation::none, "c2"}};
  // c3 would consume c2 (3x3) while the chain is at 6x6.
  EXPECT_THROW(Network<double>{net}, ShapeError);
  net.layers.pop_back();
  Network<double> g(net);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (auto& t : g.params().tensors)
    for (auto& v : t) v = nd(rng);
  Tensor<double> in(g.input_tensor_shape(2));
  for (auto& v : in.values()) v = nd(rng);
  Tensor<double> dy(g.output_tensor_shape(2));
  for (auto& v : dy.values()) v = nd(rng);
  auto objective = [&](const Tensor<double>& x) {
    const auto y = g.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * dy[i];
    return s;
  };
  ForwardCache<double> cache;
  g.forward(in, &cache);
  ParamStore<double> grads = g.params().zeros_like();
  const Tensor<double> gin = g.backward(cache, dy, grads, true);
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t t = 0; t < grads.tensors.size(); ++t)
    for (std::size_t i = 0; i < grads.tensors[t].size(); i += 3) {
      double& p = g.params().tensors[t][i];
      const double keep = p;
      p = keep + h;
      const double up = objective(in);
      p = keep - h;
      const double down = objective(in);
      p = keep;
      EXPECT_TRUE(test::near_rel(grads.tensors[t][i], (up - down) / (2 * h), 1e-5, 1e-8))
          << grads.names[t] << "[" << i << "]";
      ++checked;
    }
  EXPECT_GT(checked, 30);
  for (std::size_t i = 0; i < in.size(); i += 5) {
    auto x = in;
    x[i] += h;
    const double up = objective(x);
    x[i] -= 2 * h;
    const double down = objective(x);
    EXPECT_TRUE(test::near_rel(gin[i], (up - down) / (2 * h), 1e-5, 1e-8)) << "input " << i;
  }
}

TEST(Encoder, PositivelyHomogeneousWithZeroBiases) {
  Network<double> e(build_encoder(cifar_spec()));
  Rng rng = make_rng(11, "init/encoder");
  e.initialize(rng);
  std::mt19937_64 r(12);
  Tensor<double> x(e.input_tensor_shape(1));
  for (auto& v : x.values()) v = std::uniform_real_distribution<double>(0.0, 1.0)(r);
  Tensor<double> x2 = x;
  for (auto& v : x2.values()) v *= 2.0;
  ForwardCache<double> c1, c2;
  const auto y1 = e.forward(x, &c1), y2 = e.forward(x2, &c2);
  for (std::size_t i = 0; i < c1.outputs[0].size(); ++i) EXPECT_NEAR(c2.outputs[0][i], 2.0 * c1.outputs[0][i], 1e-12);
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_NEAR(y2[i], 2.0 * y1[i], 1e-12);
}

TEST(Generator, ZeroInputGivesBiasDeterminedConstant) {
  Network<double> g(build_generator(cifar_spec()));
  Rng rng = make_rng(13, "init/decoder");
  g.initialize(rng);
  auto& p = g.params();
  p.tensors[g.slots().back().bias] = {0.3, -0.2, 0.1};
  const auto y = g.forward(Tensor<double>(g.input_tensor_shape(1)));
  // With zero biases upstream every hidden feature is zero, so each channel is sigmoid(bias).
  for (int c = 0; c < 3; ++c) {
    const double expect = 1.0 / (1.0 + std::exp(-p.tensors[g.slots().back().bias][c]));
    for (int i = 0; i < 32 * 32; ++i) EXPECT_NEAR(y[c * 1024 + i], expect, 1e-15);
  }
}

TEST(Discriminator, DecisionMatchesOracleMean) {
  std::mt19937_64 r(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> m(37);
  long double s = 0;
  for (auto& v : m) s += (v = u(r));
  EXPECT_NEAR(discriminator_decision<double>(std::span<const double>(m)), static_cast<double>(s / m.size()), 1e-7);
}
