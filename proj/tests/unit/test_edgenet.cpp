#include <gtest/gtest.h>

#include <algorithm>

#include "eccnn/checkpoint.hpp"
#include "eccnn/edgenet.hpp"
#include "eccnn/errors.hpp"
#include "helpers.hpp"

using namespace eccnn;
using testing_util::random_tensor;
using testing_util::TempDir;

namespace {

Tensor smooth_scene(int h, int w) {
  std::vector<Real> v(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dy = y - h * 0.4, dx = x - w * 0.6;
      v[y * w + x] = static_cast<Real>((dx * dx + dy * dy < 100 ? 0.7 : 0.2) + 0.002 * x);
    }
  return Tensor::from_data({1, 1, h, w}, v);
}

void write_stack(const std::filesystem::path& path, const std::vector<std::array<int, 2>>& dims,
                 float value) {
  Checkpoint ck;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    CheckpointEntry e{"edge.scale" + std::to_string(i),
                      {static_cast<std::uint32_t>(dims[i][0]), static_cast<std::uint32_t>(dims[i][1])},
                      {}};
    e.values.assign(e.numel(), value);
    ck.add(e);
  }
  ck.save(path);
}

}  // namespace

TEST(Edges, ShapesAndRange) {
  const EdgeStack e = hierarchical_edges(random_tensor({2, 1, 64, 64}, 1, 0, 1));
  ASSERT_EQ(e.scales.size(), 3u);
  EXPECT_EQ(e.scales[0].shape(), (Shape{2, 1, 64, 64}));
  EXPECT_EQ(e.scales[1].shape(), (Shape{2, 1, 32, 32}));
  EXPECT_EQ(e.scales[2].shape(), (Shape{2, 1, 16, 16}));
  for (const auto& s : e.scales)
    for (Real v : s.data()) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
    }
  const EdgeStack odd = hierarchical_edges(random_tensor({1, 1, 13, 9}, 2, 0, 1));
  EXPECT_EQ(odd.scales[1].shape(), (Shape{1, 1, 7, 5}));
  EXPECT_EQ(odd.scales[2].shape(), (Shape{1, 1, 4, 3}));
  EXPECT_EQ(edge_scale_dim(13, 2), 4);
}

TEST(Edges, ConstantImageHasNoEdges) {
  const EdgeStack e = hierarchical_edges(Tensor::full({1, 1, 16, 16}, 0.4));
  for (const auto& s : e.scales)
    for (Real v : s.data()) EXPECT_EQ(v, 0);
}

TEST(Edges, StepEdgePeaksAtTheStep) {
  const int h = 16, w = 24, c = 11;
  std::vector<Real> v(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[y * w + x] = x >= c ? 1 : 0;
  const Tensor s0 = hierarchical_edges(Tensor::from_data({1, 1, h, w}, v)).scales[0];
  for (int y = 0; y < h; ++y) {
    Real best = 0;
    for (int x = 0; x < w; ++x) best = std::max(best, s0.at(0, 0, y, x));
    EXPECT_NEAR(s0.at(0, 0, y, c), best, 1e-6) << "row " << y;
    EXPECT_LT(s0.at(0, 0, y, 2), best);
  }
}

TEST(Edges, InvariantToIntensityShift) {
  const Tensor a = smooth_scene(32, 32);
  std::vector<Real> shifted(a.data().begin(), a.data().end());
  for (auto& x : shifted) x += Real(0.1);
  const EdgeStack ea = hierarchical_edges(a);
  const EdgeStack eb = hierarchical_edges(Tensor::from_data(a.shape(), shifted));
  for (int i = 0; i < kEdgeScales; ++i)
    EXPECT_LT(testing_util::max_abs_diff(ea.scales[i], eb.scales[i]), testing_util::tol(1e-9, 2e-4));
}

TEST(Edges, FlipEquivariance) {
  const Tensor a = smooth_scene(32, 32);
  std::vector<Real> f(a.numel());
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) f[y * 32 + x] = a.at(0, 0, y, 31 - x);
  const EdgeStack ea = hierarchical_edges(a);
  const EdgeStack ef = hierarchical_edges(Tensor::from_data(a.shape(), f));
  for (int i = 0; i < kEdgeScales; ++i) {
    const Shape s = ea.scales[i].shape();
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        EXPECT_NEAR(ea.scales[i].at(0, 0, y, x), ef.scales[i].at(0, 0, y, s.w - 1 - x),
                    testing_util::tol(1e-9, 2e-5));
  }
}

TEST(Edges, RejectsSmallOrMultiChannelImages) {
  EXPECT_THROW(hierarchical_edges(Tensor::zeros({1, 1, 7, 16})), ValidationError);
  EXPECT_THROW(hierarchical_edges(Tensor::zeros({1, 2, 16, 16})), ShapeError);
}

TEST(Edges, StackAndSlice) {
  const EdgeStack a = hierarchical_edges(random_tensor({1, 1, 16, 16}, 3, 0, 1));
  const EdgeStack b = hierarchical_edges(random_tensor({1, 1, 16, 16}, 4, 0, 1));
  const EdgeStack parts[] = {a, b};
  const EdgeStack ab = stack_edges(parts);
  EXPECT_EQ(ab.batch(), 2);
  EXPECT_EQ(testing_util::values(slice_edges(ab, 1).scales[2]), testing_util::values(b.scales[2]));
  EXPECT_THROW(slice_edges(ab, 2), ValidationError);
}

TEST(EdgeFiles, RoundTrip) {
  TempDir dir;
  const EdgeStack e = hierarchical_edges(random_tensor({1, 1, 20, 18}, 5, 0, 1));
  save_edge_maps(e, dir / "e.ecm");
  const EdgeStack l = load_edge_maps(dir / "e.ecm", 20, 18);
  EXPECT_EQ(l.source, EdgeSource::loaded);
  for (int i = 0; i < kEdgeScales; ++i) {
    ASSERT_EQ(l.scales[i].shape(), e.scales[i].shape());
    for (std::size_t j = 0; j < e.scales[i].numel(); ++j)
      EXPECT_EQ(l.scales[i].data()[j], static_cast<Real>(static_cast<float>(e.scales[i].data()[j])));
  }
}

TEST(EdgeFiles, DistinctErrors) {
  TempDir dir;
  EXPECT_THROW(load_edge_maps(dir / "missing.ecm", 16, 16), FileNotFoundError);
  write_stack(dir / "dims.ecm", {{16, 16}, {8, 8}, {4, 4}}, 0.5f);
  EXPECT_THROW(load_edge_maps(dir / "dims.ecm", 16, 20), ShapeError);
  write_stack(dir / "range.ecm", {{16, 16}, {8, 8}, {4, 4}}, 1.01f);
  EXPECT_THROW(load_edge_maps(dir / "range.ecm", 16, 16), ValidationError);
  write_stack(dir / "short.ecm", {{16, 16}, {8, 8}}, 0.5f);
  EXPECT_THROW(load_edge_maps(dir / "short.ecm", 16, 16), FormatError);
}

TEST(EdgeFiles, UniformAndSlightlyOutOfRange) {
  TempDir dir;
  write_stack(dir / "half.ecm", {{16, 16}, {8, 8}, {4, 4}}, 0.5f);
  for (const auto& s : load_edge_maps(dir / "half.ecm", 16, 16).scales)
    for (Real v : s.data()) EXPECT_EQ(v, Real(0.5));
  write_stack(dir / "edge.ecm", {{16, 16}, {8, 8}, {4, 4}}, 1.0005f);
  for (const auto& s : load_edge_maps(dir / "edge.ecm", 16, 16).scales)
    for (Real v : s.data()) EXPECT_EQ(v, 1);
}
