#include <gtest/gtest.h>

#include "support.hpp"
#include "wmr/errors.hpp"
#include "wmr/evaluate.hpp"
#include "wmr/procedural.hpp"
#include "wmr/trainer.hpp"

namespace wmr {
namespace {

using testing::TempDir;

class Evaluation : public ::testing::Test {
 protected:
  void SetUp() override {
    RngStream rng(31);
    std::vector<std::filesystem::path> bases;
    for (int i = 0; i < 2; ++i) {
      bases.push_back(dir_ / ("b" + std::to_string(i) + ".png"));
      save_image(procedural_base(rng.derive(static_cast<std::uint64_t>(i)), 16, 16), bases.back());
    }
    std::vector<WatermarkAsset> wms;
    for (int i = 0; i < 4; ++i) {
      wms.push_back(procedural_watermark(rng.derive("wm").derive(static_cast<std::uint64_t>(i)),
                                         "w" + std::to_string(i), 8, 8));
    }
    BuildOptions o;
    o.output_root = dir_ / "data";
    o.per_watermark = 3;
    o.split_ratio = 0.5;
    o.seed = 2;
    manifest_ = build_dataset(bases, wms, o);
    ASSERT_EQ(manifest_.rows_in(Split::test).size(), 6u);
  }

  TempDir dir_;
  DatasetManifest manifest_;
};

TEST_F(Evaluation, IdentityReproducesInputBaseline) {
  const EvalReport r = evaluate_identity(manifest_);
  EXPECT_EQ(r.label, "identity");
  ASSERT_EQ(r.overall.count, 6u);
  EXPECT_EQ(r.overall.output_psnr, r.overall.input_psnr);
  EXPECT_EQ(r.overall.output_dssim, r.overall.input_dssim);
  for (const auto& s : r.samples) {
    // Inputs are already 8-bit, so quantizing the identity output is a no-op.
    EXPECT_NEAR(s.quantized_psnr, s.input_psnr, 1e-9);
    EXPECT_GT(s.input_dssim, 0.0);
  }
}

TEST_F(Evaluation, CleanOracleScoresPerfectly) {
  // Looks the answer up by content: every test x is distinct.
  std::vector<std::pair<Image, Image>> table;
  for (const auto& r : manifest_.rows_in(Split::test)) {
    table.emplace_back(load_image(manifest_.resolve(r.x_path)), load_image(manifest_.resolve(r.y_path)));
  }
  const Remover oracle = [&table](const Image& x) {
    for (const auto& [k, v] : table)
      if (k == x) return v;
    return x;
  };
  const EvalReport r = evaluate(oracle, manifest_);
  EXPECT_TRUE(std::isinf(r.overall.output_psnr));
  EXPECT_EQ(r.overall.output_dssim, 0.0);
  const std::string table_text = format_table({r}, "Toy");
  EXPECT_NE(table_text.find("Input"), std::string::npos);
  EXPECT_NE(table_text.find("inf"), std::string::npos);
  EXPECT_EQ(to_json(r).at("overall").at("output_psnr"), "inf");
}

TEST_F(Evaluation, GroupsPartitionSamples) {
  const EvalReport r = evaluate_identity(manifest_);
  std::size_t total = 0;
  double weighted = 0.0;
  for (const auto& [id, a] : r.per_watermark) {
    total += a.count;
    weighted += a.input_psnr * static_cast<double>(a.count);
  }
  EXPECT_EQ(total, r.samples.size());
  EXPECT_NEAR(weighted / static_cast<double>(total), r.overall.input_psnr, 1e-9);
  EXPECT_EQ(r.per_watermark.size(), manifest_.watermark_ids(Split::test).size());
}

TEST_F(Evaluation, WorkerCountDoesNotChangeReport) {
  EvalOptions one;
  EvalOptions four;
  four.workers = 4;
  const Checkpoint ckpt = [] {
    TrainConfig c;
    c.generator.depth = 2;
    c.generator.base_channels = 4;
    c.generator.input_side = 16;
    c.discriminator.n_layers = 1;
    return Trainer(c).checkpoint();
  }();
  const EvalReport a = evaluate(ckpt, manifest_, one);
  const EvalReport b = evaluate(ckpt, manifest_, four);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST_F(Evaluation, Errors) {
  DatasetManifest empty = manifest_;
  std::erase_if(empty.rows, [](const ManifestRow& r) { return r.split == Split::test; });
  EXPECT_THROW((void)evaluate_identity(empty), DataError);
  DatasetManifest missing = manifest_;
  missing.root = dir_ / "nowhere";
  EXPECT_THROW((void)evaluate_identity(missing), FileNotFoundError);
  const Remover shrink = [](const Image& x) { return resize(x, 8, 8); };
  EXPECT_THROW((void)evaluate(shrink, manifest_), ShapeError);
}

TEST(EvaluationFormat, AggregateIsArithmeticMean) {
  std::vector<SampleScore> s(2);
  s[0].output_psnr = 20.0;
  s[1].output_psnr = 30.0;
  s[0].input_dssim = 0.1;
  s[1].input_dssim = 0.3;
  const Aggregate a = aggregate(s);
  EXPECT_EQ(a.count, 2u);
  EXPECT_DOUBLE_EQ(a.output_psnr, 25.0);
  EXPECT_DOUBLE_EQ(a.input_dssim, 0.2);
  EXPECT_EQ(aggregate({}).count, 0u);
}

TEST(EvaluationFormat, ConventionsAreRecorded) {
  const auto j = metric_conventions();
  EXPECT_EQ(j.at("ssim_window_size"), 11);
  EXPECT_DOUBLE_EQ(j.at("ssim_sigma").get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(j.at("peak").get<double>(), 1.0);
}

}  // namespace
}  // namespace wmr
