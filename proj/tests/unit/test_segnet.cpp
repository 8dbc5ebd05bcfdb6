#include <gtest/gtest.h>

#include <set>

#include "eccnn/errors.hpp"
#include "eccnn/gradcheck.hpp"
#include "eccnn/segnet.hpp"
#include "helpers.hpp"

using namespace eccnn;
using testing_util::random_tensor;
using testing_util::values;

namespace {

ModelConfig config(std::vector<std::string> stages, std::uint64_t seed = 3) {
  ModelConfig c;
  c.set_gft_stages(stages);
  c.seed = testing_util::kTestSeedOffset + seed;
  return c;
}

std::set<std::pair<std::string, std::string>> layout(const Model& m) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [name, p] : m.named_parameters()) out.insert({name, p.shape().str()});
  return out;
}

}  // namespace

TEST(ModelConfig, RejectsUnknownStages) {
  ModelConfig c;
  EXPECT_THROW(c.set_gft_stages({"conv5_x"}), ValidationError);
  EXPECT_THROW(c.set_gft_stages({"conv9"}), ValidationError);
  c.set_gft_stages({"conv4_x", "conv2_x"});
  EXPECT_EQ(c.gft_stages, (std::vector<std::string>{"conv2_x", "conv4_x"}));
  c.num_classes = 1;
  EXPECT_THROW(Model::build(c), ValidationError);
}

TEST(Model, ParameterLayoutAndCount) {
  const Model base = Model::build(config({}));
  const Model ec = Model::build(config({"conv2_x"}));
  EXPECT_GT(ec.parameter_count(), base.parameter_count());
  const auto lb = layout(base);
  const auto le = layout(ec);
  for (const auto& entry : lb) EXPECT_TRUE(le.count(entry)) << entry.first;
  for (const auto& [name, shape] : le)
    if (!lb.count({name, shape})) {
      EXPECT_EQ(name.rfind("conditioning.conv2_x.", 0), 0u) << name;
    }
  EXPECT_GT(Model::build(config({"conv2_x", "conv3_x"})).parameter_count(), ec.parameter_count());
}

TEST(Model, SameSeedGivesIdenticalWeights) {
  const auto a = Model::build(config({"conv3_x"})).to_checkpoint();
  const auto b = Model::build(config({"conv3_x"})).to_checkpoint();
  EXPECT_EQ(a.serialize(), b.serialize());
  const auto c = Model::build(config({"conv3_x"}, 4)).to_checkpoint();
  EXPECT_NE(a.serialize(), c.serialize());
}

TEST(Model, ForwardShapeAndDeterminism) {
  const Model m = Model::build(config({"conv2_x"}));
  const Tensor img = random_tensor({1, 1, 64, 64}, 1, 0, 1);
  const EdgeStack e = hierarchical_edges(img);
  const Tensor a = m.forward(img, e, Mode::train);
  EXPECT_EQ(a.shape(), (Shape{1, 6, 64, 64}));
  EXPECT_EQ(values(a), values(m.forward(img, e, Mode::train)));
  EXPECT_EQ(m.backbone_features(img, e, Mode::eval).shape(), (Shape{1, 64, 8, 8}));
}

TEST(Model, BaselineReductionIsBitExact) {
  const Tensor img = random_tensor({2, 1, 32, 32}, 2, 0, 1);
  const EdgeStack e = hierarchical_edges(img);
  const Model base = Model::build(config({}));
  Model ec = Model::build(config({"conv2_x", "conv3_x", "conv4_x"}));
  ec.set_bypass(true);
  EXPECT_EQ(values(base.forward(img, e, Mode::train)), values(ec.forward(img, e, Mode::train)));
  // The unconditioned model does not need edge maps at all.
  EXPECT_EQ(values(base.forward(img, EdgeStack{}, Mode::eval)), values(ec.forward(img, e, Mode::eval)));
}

TEST(Model, EvalLogitsIndependentOfBatch) {
  const Model m = Model::build(config({"conv2_x"}));
  const Tensor pair = random_tensor({2, 1, 32, 32}, 3, 0, 1);
  m.forward(pair, hierarchical_edges(pair), Mode::train);
  const Tensor one = Tensor::from_data({1, 1, 32, 32}, {pair.data().begin(), pair.data().begin() + 1024});
  const Tensor lp = m.forward(pair, hierarchical_edges(pair), Mode::eval);
  const Tensor l1 = m.forward(one, hierarchical_edges(one), Mode::eval);
  for (std::size_t i = 0; i < l1.numel(); ++i) EXPECT_EQ(lp.data()[i], l1.data()[i]);
}

TEST(Model, LogitsDependOnEdges) {
  for (auto kind : {ConditioningKind::gft, ConditioningKind::sft}) {
    ModelConfig c = config({"conv2_x"});
    c.conditioning = kind;
    const Model m = Model::build(c);
    const Tensor img = random_tensor({1, 1, 32, 32}, 4, 0, 1);
    const EdgeStack e = hierarchical_edges(img);
    const EdgeStack other = hierarchical_edges(random_tensor({1, 1, 32, 32}, 5, 0, 1));
    EXPECT_GT(testing_util::max_abs_diff(m.forward(img, e, Mode::train), m.forward(img, other, Mode::train)),
              1e-6);
  }
  ModelConfig c = config({"conv2_x"});
  const Model m = Model::build(c);
  const Tensor img = random_tensor({1, 1, 32, 32}, 6, 0, 1);
  EXPECT_THROW(m.forward(img, EdgeStack{}, Mode::train), ValidationError);
}

TEST(EcBlock, BypassEqualsPlainBlock) {
  const std::uint64_t seed = testing_util::kTestSeedOffset + 7;
  ResidualBlock plain = ResidualBlock::create(8, 16, 2, 1, seed, "b");
  ResidualBlock ec = ResidualBlock::create(8, 16, 2, 1, seed, "b");
  ec.attach_conditioning(GftLayer::create(16, 1, GateMode::sigmoid, seed, "c"));
  ec.set_bypass(true);
  const Tensor x = random_tensor({2, 8, 12, 12}, 8);
  const EdgeStack e = hierarchical_edges(random_tensor({2, 1, 24, 24}, 9, 0, 1));
  EXPECT_EQ(values(ec_block_forward(ec, x, e, 0, Mode::train)), values(plain.forward(x, nullptr, Mode::train)));
  ec.set_bypass(false);
  EXPECT_NE(values(ec_block_forward(ec, x, e, 0, Mode::train)), values(plain.forward(x, nullptr, Mode::train)));
  EXPECT_THROW(ec_block_forward(ec, x, e, 3, Mode::train), ValidationError);
}

TEST(EcBlock, ZeroConditioningLeavesOnlyTheSkipPath) {
  const std::uint64_t seed = testing_util::kTestSeedOffset + 10;
  ResidualBlock ec = ResidualBlock::create(8, 8, 1, 1, seed, "b");
  GftLayer gft = GftLayer::create(8, 1, GateMode::sigmoid, seed, "c");
  for (auto& v : gft.modulation().conv2().bias.data()) v = 0;
  gft.gamma_branch().fill_zero();
  gft.beta_branch().fill_zero();
  ec.attach_conditioning(gft);
  const Tensor x = random_tensor({1, 8, 10, 10}, 11);
  const Tensor z = Tensor::zeros({1, 1, 10, 10});
  const Tensor y = ec.forward(x, &z, Mode::train);
  const Tensor expected = relu(x);
  EXPECT_EQ(values(y), values(expected));
}

TEST(EcBlock, EdgeScaleFollowsStageResolution) {
  // conv2_x runs at 1/4, the dilated stages stay at 1/8; the finest
  // matching edge stack is the 1/4 one for all of them.
  EXPECT_EQ(edge_scale_for_stage(0), 2);
  for (int s = 1; s < 4; ++s) EXPECT_EQ(edge_scale_for_stage(s), 2);
  EXPECT_THROW(edge_scale_for_stage(4), ValidationError);
  EXPECT_THROW(edge_scale_for_stage(-1), ValidationError);
}

TEST(Aspp, ShapesAndConstants) {
  const std::uint64_t seed = testing_util::kTestSeedOffset + 12;
  const Aspp one = Aspp::create(4, 6, {1}, seed, "aspp");
  EXPECT_EQ(one.forward(random_tensor({2, 4, 1, 1}, 13), Mode::train).shape(), (Shape{2, 6, 1, 1}));
  const Aspp a = Aspp::create(4, 6, {1, 2, 3}, seed, "aspp");
  EXPECT_EQ(a.forward(random_tensor({1, 4, 9, 7}, 14), Mode::train).shape(), (Shape{1, 6, 9, 7}));
  EXPECT_THROW(Aspp::create(4, 6, {}, seed, "aspp"), ValidationError);

  // With running statistics in place, a constant input yields a constant
  // output away from the zero-padded border.
  a.forward(random_tensor({2, 4, 16, 16}, 15), Mode::train);
  std::vector<Real> c(4 * 16 * 16);
  for (int ch = 0; ch < 4; ++ch)
    for (int i = 0; i < 256; ++i) c[ch * 256 + i] = Real(0.3 * (ch + 1));
  const Tensor y = a.forward(Tensor::from_data({1, 4, 16, 16}, c), Mode::eval);
  for (int ch = 0; ch < 6; ++ch)
    for (int i = 3; i < 13; ++i)
      for (int j = 3; j < 13; ++j)
        EXPECT_NEAR(y.at(0, ch, i, j), y.at(0, ch, 8, 8), testing_util::tol(1e-12, 1e-5));
  // A 1 x 1 map has no interior border at all.
  const Tensor p = a.forward(Tensor::full({1, 4, 1, 1}, 0.5), Mode::eval);
  EXPECT_EQ(p.shape(), (Shape{1, 6, 1, 1}));
}

TEST(Model, CheckpointRoundTripAndClassifierReset) {
  const Model a = Model::build(config({"conv2_x"}, 20));
  Model b = Model::build(config({"conv2_x"}, 21));
  b.load_checkpoint(a.to_checkpoint());
  EXPECT_EQ(a.to_checkpoint().serialize(), b.to_checkpoint().serialize());

  Model c = Model::build(config({}, 22));
  EXPECT_THROW(c.load_checkpoint(a.to_checkpoint()), ValidationError);
  b.reset_classifier(3, 5);
  EXPECT_EQ(b.config().num_classes, 3);
  Model d = Model::build(config({"conv2_x"}, 23));
  EXPECT_THROW(d.load_checkpoint(b.to_checkpoint()), ValidationError);
  d.load_checkpoint(b.to_checkpoint(), true);
  const Tensor img = random_tensor({1, 1, 16, 16}, 24, 0, 1);
  EXPECT_EQ(b.forward(img, hierarchical_edges(img), Mode::train).shape().c, 3);
}

TEST(Gradcheck, SuitePassesInDoublePrecision) {
  if (kPrecisionBits != 64) GTEST_SKIP() << "finite differences need 64-bit";
  const auto results = gradcheck_suite();
  EXPECT_GE(results.size(), 13u);
  for (const auto& r : results) EXPECT_TRUE(r.pass()) << r.layer << " error " << r.error;
}
