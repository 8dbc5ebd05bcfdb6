#include <gtest/gtest.h>

#include "eccnn/dataset.hpp"
#include "eccnn/errors.hpp"
#include "helpers.hpp"

using namespace eccnn;
using testing_util::TempDir;

TEST(Dataset, ImageNormalization) {
  const GrayImage g{1, 3, {0, 128, 255}};
  const Tensor t = image_to_tensor(g);
  EXPECT_EQ(t.shape(), (Shape{1, 1, 1, 3}));
  EXPECT_EQ(t.data()[0], 0);
  EXPECT_NEAR(t.data()[1], 0.50196, 1e-5);
  EXPECT_EQ(t.data()[1], Real(128) / Real(255));
  EXPECT_EQ(t.data()[2], 1);
  EXPECT_EQ(tensor_to_image(t), g);
}

TEST(Dataset, LoadsManifestsWithAndWithoutEdges) {
  TempDir dir;
  SynthSceneSpec spec;
  spec.height = spec.width = 16;
  DatasetManifest m = thermogen(spec, 2, testing_util::kTestSeedOffset, dir.path());
  const Dataset d = load_dataset(dir / "manifest.txt");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.num_classes(), 6);
  EXPECT_FALSE(d.samples[0].edges.has_value());
  EXPECT_THROW(load_dataset(m, true), ValidationError);

  for (auto& e : m.entries) {
    e.edges = dir / (e.image.stem().string() + ".ecm");
    save_edge_maps(hierarchical_edges(read_image(e.image)), *e.edges);
  }
  save_manifest(m, dir / "with_edges.txt");
  const Dataset de = load_dataset(dir / "with_edges.txt", true);
  ASSERT_TRUE(de.samples[1].edges.has_value());
  EXPECT_EQ(sample_edges(de.samples[1]).source, EdgeSource::loaded);
  EXPECT_EQ(sample_edges(d.samples[1]).source, EdgeSource::computed);
}
