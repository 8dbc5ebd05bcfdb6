#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eccnn/errors.hpp"
#include "eccnn/metrics.hpp"
#include "eccnn/random.hpp"
#include "oracles/metrics_oracle.hpp"

using namespace eccnn;

namespace {

LabelMap mask(int h, int w, std::vector<std::int32_t> v) {
  LabelMap m(1, h, w);
  m.values = std::move(v);
  return m;
}

}  // namespace

TEST(Confusion, HandCountedExample) {
  ConfusionMatrix cm(2);
  cm.accumulate(mask(2, 2, {0, 1, 1, 1}), mask(2, 2, {0, 0, 1, 1}));
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 0), 0u);
  EXPECT_EQ(cm.at(1, 1), 2u);
  EXPECT_EQ(pixel_accuracy(cm), 0.75);
  const auto iou = per_class_iou(cm);
  EXPECT_DOUBLE_EQ(*iou[0], 0.5);
  EXPECT_DOUBLE_EQ(*iou[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_iou(cm), 7.0 / 12.0);
}

TEST(Confusion, PerfectPredictionIsDiagonal) {
  const LabelMap m = mask(2, 3, {0, 1, 2, 2, 1, 0});
  ConfusionMatrix cm(4);
  cm.accumulate(m, m);
  for (int g = 0; g < 4; ++g)
    for (int p = 0; p < 4; ++p)
      if (g != p) {
        EXPECT_EQ(cm.at(g, p), 0u);
      }
  EXPECT_EQ(pixel_accuracy(cm), 1.0);
  EXPECT_EQ(mean_iou(cm), 1.0);
  // Class 3 never appears and is excluded from the mean.
  EXPECT_FALSE(per_class_iou(cm)[3].has_value());
}

TEST(Confusion, IgnoredPixelsAndErrors) {
  ConfusionMatrix cm(3);
  cm.accumulate(mask(1, 3, {0, 1, 2}), mask(1, 3, {kIgnoreIndex, kIgnoreIndex, kIgnoreIndex}));
  EXPECT_EQ(cm.total(), 0u);
  EXPECT_THROW(pixel_accuracy(cm), ValidationError);
  EXPECT_THROW(mean_iou(cm), ValidationError);
  cm.accumulate(mask(1, 3, {0, 1, 5}), mask(1, 3, {0, 1, kIgnoreIndex}));
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_THROW(cm.accumulate(mask(1, 2, {0, 3}), mask(1, 2, {0, 1})), ValidationError);
  EXPECT_THROW(cm.accumulate(mask(1, 2, {0, 1}), mask(1, 2, {0, 3})), ValidationError);
  EXPECT_THROW(cm.accumulate(mask(1, 2, {0, 1}), mask(2, 1, {0, 1})), ShapeError);
  EXPECT_THROW(cm.merge(ConfusionMatrix(4)), ValidationError);
}

TEST(Confusion, MatchesSetOracleOnRandomMasks) {
  Rng rng(1000000);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(6));
    std::vector<std::int32_t> p(64), g(64);
    for (int i = 0; i < 64; ++i) {
      p[i] = static_cast<std::int32_t>(rng.uniform_int(k));
      g[i] = rng.bernoulli(0.1) ? kIgnoreIndex : static_cast<std::int32_t>(rng.uniform_int(k));
    }
    if (std::all_of(g.begin(), g.end(), [](int v) { return v == kIgnoreIndex; })) g[0] = 0;
    ConfusionMatrix cm(k);
    cm.accumulate(mask(8, 8, p), mask(8, 8, g));
    const auto o = oracle::set_metrics({p.begin(), p.end()}, {g.begin(), g.end()}, k, kIgnoreIndex);
    ASSERT_EQ(pixel_accuracy(cm), o.pixel_accuracy) << "trial " << trial;
    ASSERT_EQ(mean_iou(cm), o.mean_iou) << "trial " << trial;
    for (const auto& v : per_class_iou(cm))
      if (v) {
        EXPECT_GE(*v, 0);
        EXPECT_LE(*v, 1);
      }
  }
}

TEST(Confusion, OrderIndependentAndMergeable) {
  Rng rng(1000001);
  std::vector<std::pair<LabelMap, LabelMap>> images;
  for (int i = 0; i < 12; ++i) {
    std::vector<std::int32_t> p(20), g(20);
    for (int j = 0; j < 20; ++j) {
      p[j] = static_cast<std::int32_t>(rng.uniform_int(4));
      g[j] = static_cast<std::int32_t>(rng.uniform_int(4));
    }
    images.emplace_back(mask(4, 5, p), mask(4, 5, g));
  }
  ConfusionMatrix forward(4), shuffled(4), left(4), right(4);
  for (const auto& [p, g] : images) forward.accumulate(p, g);
  auto order = images;
  std::mt19937 shuffle_engine(7);
  std::shuffle(order.begin(), order.end(), shuffle_engine);
  for (const auto& [p, g] : order) shuffled.accumulate(p, g);
  for (std::size_t i = 0; i < images.size(); ++i)
    (i % 2 ? left : right).accumulate(images[i].first, images[i].second);
  left.merge(right);
  EXPECT_EQ(forward, shuffled);
  EXPECT_EQ(forward, left);
  EXPECT_EQ(forward.total(), 240u);
}

TEST(Report, CsvLayout) {
  ConfusionMatrix cm(2);
  cm.accumulate(mask(2, 2, {0, 1, 1, 1}), mask(2, 2, {0, 0, 1, 1}));
  const std::string csv = evaluation_report_csv(summarize(cm), {"background", "hot"});
  EXPECT_EQ(csv.rfind("class_name,iou\n", 0), 0u);
  EXPECT_NE(csv.find("background,0.5"), std::string::npos);
  EXPECT_NE(csv.find("hot,0.66666"), std::string::npos);
  EXPECT_NE(csv.find("0.58333"), std::string::npos);
}
