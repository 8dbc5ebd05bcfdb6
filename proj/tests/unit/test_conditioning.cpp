#include <gtest/gtest.h>

#include <cmath>

#include "eccnn/conditioning.hpp"
#include "eccnn/errors.hpp"
#include "eccnn/gradcheck.hpp"
#include "helpers.hpp"

using namespace eccnn;
using testing_util::random_tensor;
using testing_util::tol;
using testing_util::values;

namespace {

ConvLayer branch(int c, std::uint64_t seed, const char* name) {
  return ConvLayer::create(c, c, 3, {1, 1, 1}, true, testing_util::kTestSeedOffset + seed, name);
}

// Spatially permuted copy: rows reversed.
Tensor flip_rows(const Tensor& t) {
  const Shape s = t.shape();
  std::vector<Real> v(t.numel());
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          v[((static_cast<std::size_t>(n) * s.c + c) * s.h + y) * s.w + x] = t.at(n, c, s.h - 1 - y, x);
  return Tensor::from_data(s, v);
}

}  // namespace

TEST(Film, HandExpansion) {
  const Tensor x = Tensor::from_data({1, 2, 1, 1}, {1, 2});
  const Tensor y = film(x, Tensor::from_data({1, 2, 1, 1}, {2, 3}), Tensor::from_data({1, 2, 1, 1}, {10, 20}));
  EXPECT_EQ(values(y), (std::vector<Real>{12, 26}));
}

TEST(Film, IdentityAndConstant) {
  const Tensor x = random_tensor({2, 3, 4, 4}, 1);
  const Tensor ones = Tensor::full({1, 3, 1, 1}, 1);
  const Tensor zeros = Tensor::zeros({1, 3, 1, 1});
  EXPECT_EQ(values(film(x, ones, zeros)), values(x));
  const Tensor shifted = film(x, zeros, Tensor::full({1, 3, 1, 1}, 0.75));
  for (Real v : shifted.data()) EXPECT_EQ(v, Real(0.75));
  EXPECT_THROW(film(x, Tensor::zeros({1, 2, 1, 1}), zeros), ShapeError);
}

TEST(Sft, HandElementwise) {
  const Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor g = Tensor::from_data({1, 1, 2, 2}, {1, 0, 0, 1});
  const Tensor b = Tensor::from_data({1, 1, 2, 2}, {0, 1, 1, 0});
  EXPECT_EQ(values(sft(x, g, b)), (std::vector<Real>{1, 1, 1, 4}));
  EXPECT_EQ(values(sft(x, Tensor::full(x.shape(), 1), Tensor::zeros(x.shape()))), values(x));
  EXPECT_THROW(sft(x, Tensor::zeros({1, 1, 1, 1}), b), ShapeError);
}

TEST(Sft, EqualsFilmForSpatiallyConstantMaps) {
  const Tensor x = random_tensor({2, 3, 5, 4}, 2);
  const Tensor gv = random_tensor({1, 3, 1, 1}, 3);
  const Tensor bv = random_tensor({1, 3, 1, 1}, 4);
  const Shape s = x.shape();
  std::vector<Real> gm(x.numel()), bm(x.numel());
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gm[(static_cast<std::size_t>(n) * s.c + c) * s.plane() + i] = gv.data()[c];
        bm[(static_cast<std::size_t>(n) * s.c + c) * s.plane() + i] = bv.data()[c];
      }
  EXPECT_EQ(values(sft(x, Tensor::from_data(s, gm), Tensor::from_data(s, bm))), values(film(x, gv, bv)));
}

TEST(Sft, SpatialVariationIsNotExpressibleByFilm) {
  // gamma varies inside the channel; the best per-channel vector is its mean.
  const Tensor x = Tensor::full({1, 1, 1, 2}, 1);
  const Tensor g = Tensor::from_data({1, 1, 1, 2}, {1, 3});
  const Tensor y = sft(x, g, Tensor::zeros(x.shape()));
  EXPECT_NE(y.data()[0], y.data()[1]);
  const Tensor f = film(x, Tensor::full({1, 1, 1, 1}, 2), Tensor::zeros({1, 1, 1, 1}));
  EXPECT_EQ(f.data()[0], f.data()[1]);
}

TEST(GftGate, SigmoidGates) {
  const Tensor g = Tensor::from_data({1, 1, 1, 4}, {0, 1.27846, -50, 3});
  const AffineParams p = gft_gate(g, g);
  EXPECT_EQ(p.gate_gamma.data()[0], Real(0.5));
  EXPECT_EQ(p.gamma_gated.data()[0], 0);
  EXPECT_NEAR(p.gamma_gated.data()[1], 1.0, 1e-5);
  EXPECT_LT(std::abs(p.gamma_gated.data()[2]), 1e-18);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(p.gamma_gated.data()[i], g.data()[i] * p.gate_gamma.data()[i]);
    EXPECT_EQ(p.beta_gated.data()[i], g.data()[i] * p.gate_beta.data()[i]);
  }
  EXPECT_THROW(gft_gate(g, Tensor::zeros({1, 1, 1, 3})), ShapeError);
}

TEST(GftGate, GatedParamsAreBounded) {
  const Tensor g = random_tensor({2, 3, 4, 4}, 5, -6, 6);
  const Tensor b = random_tensor({2, 3, 4, 4}, 6, -6, 6);
  const AffineParams p = gft_gate(g, b);
  for (std::size_t i = 0; i < g.numel(); ++i) {
    EXPECT_GT(p.gate_gamma.data()[i], 0);
    EXPECT_LT(p.gate_gamma.data()[i], 1);
    EXPECT_LE(std::abs(p.gamma_gated.data()[i]), std::abs(g.data()[i]));
    EXPECT_LE(std::abs(p.beta_gated.data()[i]), std::abs(b.data()[i]));
  }
}

TEST(GftApply, ForcedOneGateEqualsSft) {
  const Tensor x = random_tensor({2, 4, 6, 6}, 7);
  const Tensor zh = random_tensor({2, 4, 6, 6}, 8, 0, 1);
  const ConvLayer g = branch(4, 9, "g");
  const ConvLayer b = branch(4, 10, "b");
  EXPECT_EQ(values(gft_apply(x, zh, g, b, GateMode::forced_one)),
            values(sft(x, g.forward(zh), b.forward(zh))));

  GftLayer layer = GftLayer::create(4, 1, GateMode::sigmoid, 11, "gft");
  const Tensor z = random_tensor({2, 1, 12, 12}, 12, 0, 1);
  layer.set_gate(GateMode::forced_one);
  const Tensor zhat = layer.condition(z, x.shape()).z_hat;
  EXPECT_EQ(values(layer.forward(x, z)),
            values(sft(x, layer.gamma_branch().forward(zhat), layer.beta_branch().forward(zhat))));
}

TEST(GftApply, ZeroBranchesGiveZeroOutput) {
  const Tensor x = random_tensor({1, 3, 5, 5}, 13);
  const Tensor zh = random_tensor({1, 3, 5, 5}, 14, 0, 1);
  ConvLayer g = branch(3, 15, "g");
  ConvLayer b = branch(3, 16, "b");
  g.fill_zero();
  b.fill_zero();
  const Tensor out = gft_apply(x, zh, g, b);
  for (Real v : out.data()) EXPECT_EQ(v, 0);
  EXPECT_THROW(gft_apply(x, Tensor::zeros({1, 3, 4, 5}), g, b), ShapeError);
}

TEST(GftApply, DependsOnEdgeLayout) {
  const Tensor x = random_tensor({1, 3, 6, 6}, 17);
  const Tensor zh = random_tensor({1, 3, 6, 6}, 18, 0, 1);
  const ConvLayer g = branch(3, 19, "g");
  const ConvLayer b = branch(3, 20, "b");
  EXPECT_GT(testing_util::max_abs_diff(gft_apply(x, zh, g, b), gft_apply(x, flip_rows(zh), g, b)), 1e-4);
}

TEST(GftLayer, StartsAtIdentityWhenBranchWeightsVanish) {
  GftLayer layer = GftLayer::create(4, 1, GateMode::sigmoid, 21, "gft");
  for (auto& w : layer.gamma_branch().weight.data()) w = 0;
  for (auto& w : layer.beta_branch().weight.data()) w = 0;
  const Tensor x = random_tensor({1, 4, 6, 6}, 22);
  const Tensor z = random_tensor({1, 1, 6, 6}, 23, 0, 1);
  EXPECT_LT(testing_util::max_abs_diff(layer.forward(x, z), x), tol(1e-15, 1e-6));
}

TEST(FeatureModulation, ShapeContractAndZeroWeights) {
  FeatureModulation fm = FeatureModulation::create(1, 256, 24, "fm");
  const Tensor z = random_tensor({1, 1, 64, 64}, 25, 0, 1);
  const Tensor zh = fm.forward(z, 32, 32);
  EXPECT_EQ(zh.shape(), (Shape{1, 256, 32, 32}));
  EXPECT_EQ(fm.conv1().out_channels(), 128);
  EXPECT_THROW(fm.forward(z, 0, 32), ValidationError);
  fm.conv1().fill_zero();
  fm.conv2().fill_zero();
  const Tensor silent = fm.forward(z, 16, 16);
  for (Real v : silent.data()) EXPECT_EQ(v, 0);
}

TEST(ConditioningGradients, FiniteDifferences) {
  if (kPrecisionBits != 64) GTEST_SKIP() << "finite differences need 64-bit";
  const Tensor x = random_tensor({1, 2, 5, 5}, 26, -1, 1, true);
  const Tensor gv = random_tensor({1, 2, 1, 1}, 27, -1, 1, true);
  const Tensor bv = random_tensor({1, 2, 1, 1}, 28, -1, 1, true);
  const Tensor gm = random_tensor({1, 2, 5, 5}, 29, -1, 1, true);
  const Tensor bm = random_tensor({1, 2, 5, 5}, 30, -1, 1, true);
  EXPECT_LT(gradient_error([&] { return random_projection(film(x, gv, bv), 1); }, {x, gv, bv}), 1e-4);
  EXPECT_LT(gradient_error([&] { return random_projection(sft(x, gm, bm), 2); }, {x, gm, bm}), 1e-4);
  EXPECT_LT(gradient_error([&] { return random_projection(gft_gate(gm, bm).gamma_gated, 3); }, {gm}), 1e-4);

  FeatureModulation fm = FeatureModulation::create(1, 2, 31, "fm");
  const Tensor z = random_tensor({1, 1, 10, 10}, 32, 0, 1, true);
  EXPECT_LT(gradient_error([&] { return mean(fm.forward(z, 5, 5)); },
                           {z, fm.conv1().weight.value(), fm.conv2().weight.value()}),
            1e-4);

  const ConvLayer g = branch(2, 33, "g");
  const ConvLayer b = branch(2, 34, "b");
  const Tensor zh = random_tensor({1, 2, 5, 5}, 35, 0, 1, true);
  EXPECT_LT(gradient_error([&] { return mean(gft_apply(x, zh, g, b)); },
                           {x, zh, g.weight.value(), b.weight.value(), g.bias.value()}),
            1e-4);
}
