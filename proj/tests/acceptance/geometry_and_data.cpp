#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "criteria.hpp"
#include "wmr/discriminator.hpp"
#include "wmr/generator.hpp"
#include "wmr/image.hpp"
#include "wmr/procedural.hpp"
#include "wmr/watermark.hpp"

namespace wmr::acceptance {

namespace fs = std::filesystem;

namespace {

struct Layer {
  int kernel, stride, pad;
};

// Default patch trunk plus its two stride-1 heads.
std::vector<Layer> patch_layers(int n_layers) {
  std::vector<Layer> layers(static_cast<std::size_t>(n_layers), Layer{4, 2, 1});
  layers.push_back({4, 1, 1});
  layers.push_back({4, 1, 1});
  return layers;
}

// Map side by the usual output-size formula.
int map_side_oracle(const std::vector<Layer>& layers, int side) {
  for (const Layer& l : layers) side = (side + 2 * l.pad - l.kernel) / l.stride + 1;
  return side;
}

// Receptive field by walking back from one output entry to the input.
int receptive_field_oracle(const std::vector<Layer>& layers) {
  int r = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = (r - 1) * it->stride + it->kernel;
  return r;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

Outcome shape_suite(const Context&) {
  Checks c;
  RngStream rng(41);
  for (int side : {64, 128, 256}) {
    GeneratorConfig cfg;
    cfg.input_side = side;
    const GeneratorParams g = init_generator(cfg, RngStream(42));
    const nn::Tensor x = random_tensor({1, 3, side, side}, rng);
    const nn::Tensor y = generator_forward(g, x);
    c.expect(y.shape() == x.shape(), "generator shape at side " + std::to_string(side));
    const auto range = std::minmax_element(y.data().begin(), y.data().end());
    c.expect(*range.first >= -1.0 && *range.second <= 1.0, "generator range at " + std::to_string(side));
  }

  const DiscriminatorConfig dcfg;
  const auto layers = patch_layers(dcfg.n_layers);
  c.expect(map_side_oracle(layers, 256) == 30, "oracle map side 30");
  c.expect(receptive_field_oracle(layers) == 70, "oracle receptive field 70");
  c.expect(score_map_side(dcfg, 256) == map_side_oracle(layers, 256), "library map side");
  c.expect(patch_receptive_field(dcfg) == receptive_field_oracle(layers), "library receptive field");
  for (int side : {64, 96, 128, 200}) {
    c.expect(score_map_side(dcfg, side) == map_side_oracle(layers, side),
             "map side at " + std::to_string(side));
  }
  const DiscriminatorParams d = init_discriminator(dcfg, RngStream(43));
  const nn::Tensor cond = random_tensor({1, 3, 256, 256}, rng);
  const nn::Tensor cand = random_tensor({1, 3, 256, 256}, rng);
  const PatchScoreMap map = discriminator_forward(d, cond, cand);
  c.expect(map.probabilities.shape() == nn::Shape{1, 1, 30, 30}, "forward map is 1x1x30x30");
  c.expect(map.receptive_field == 70, "forward receptive field 70");
  return c.outcome("generator preserves 64/128/256; patch map 30x30 with 70 px field at 256");
}

Outcome compositing_suite(const Context& ctx) {
  Checks c;
  RngStream rng(51);
  const fs::path root = ctx.work_dir / "compositing";
  fs::remove_all(root);
  int pixels_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RngStream t = rng.derive(static_cast<std::uint64_t>(trial));
    const std::string tag = "trial " + std::to_string(trial);
    const int wh = static_cast<int>(t.uniform_int(4, 16));
    const int ww = static_cast<int>(t.uniform_int(4, 16));
    const WatermarkAsset wm = procedural_watermark(t.derive("wm"), "w", wh, ww);
    const int bw = static_cast<int>(t.uniform_int(16, 48));
    const int min_h = footprint_for(bw, wh, ww, 0.3).height;
    const int bh = static_cast<int>(t.uniform_int(std::max(16, min_h), 48));
    const Image base = procedural_base(t.derive("base"), bh, bw);
    // Opacity below 1 keeps every pixel invertible.
    const PlacementSpec spec = sample_placement(t, bh, bw, wh, ww, PlacementRanges{0.3, 1.0, 0.3, 0.9});
    const Image out = composite(base, wm, spec);
    const Footprint fp = footprint_for(bw, wh, ww, spec.scale);

    bool local = true, in_range = true;
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < bh; ++y)
        for (int x = 0; x < bw; ++x) {
          const double v = out.at(ch, y, x);
          in_range = in_range && v >= 0.0 && v <= 1.0;
          const bool inside = y >= spec.top && y < spec.top + fp.height && x >= spec.left &&
                              x < spec.left + fp.width;
          if (!inside) {
            local = local && v == base.at(ch, y, x);
            ++pixels_checked;
          }
        }
    c.expect(local, tag + " locality");
    c.expect(in_range, tag + " range");
    const Image back = invert_composite(out, wm, spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
      worst = std::max(worst, std::abs(back.data()[i] - base.data()[i]));
    }
    c.expect(worst <= 1e-6, tag + " inversion error " + fmt(worst));

    // A small dataset built serially and in parallel.
    std::vector<fs::path> bases;
    const int n_bases = static_cast<int>(t.uniform_int(1, 3));
    for (int i = 0; i < n_bases; ++i) {
      const fs::path p = root / ("base_" + std::to_string(trial) + "_" + std::to_string(i) + ".png");
      fs::create_directories(p.parent_path());
      save_image(procedural_base(t.derive("bases").derive(static_cast<std::uint64_t>(i)), bh, bw), p);
      bases.push_back(p);
    }
    std::vector<WatermarkAsset> wms;
    const int n_wms = static_cast<int>(t.uniform_int(2, 6));
    for (int i = 0; i < n_wms; ++i) {
      wms.push_back(procedural_watermark(t.derive("wms").derive(static_cast<std::uint64_t>(i)),
                                         "id" + std::to_string(i), wh, ww));
    }
    BuildOptions opts;
    opts.per_watermark = static_cast<int>(t.uniform_int(1, 3));
    opts.split_ratio = t.uniform(0.3, 0.8);
    opts.seed = t.next_u64();
    opts.ranges = {0.3, 1.0, 0.3, 1.0};
    opts.output_root = root / ("serial_" + std::to_string(trial));
    const DatasetManifest serial = build_dataset(bases, wms, opts);
    opts.output_root = root / ("parallel_" + std::to_string(trial));
    opts.workers = 4;
    const DatasetManifest parallel = build_dataset(bases, wms, opts);

    bool same = read_bytes(serial.root / "manifest.txt") == read_bytes(parallel.root / "manifest.txt");
    for (const ManifestRow& r : serial.rows) {
      for (const std::string& rel : {r.x_path, r.y_path}) {
        same = same && read_bytes(serial.resolve(rel)) == read_bytes(parallel.resolve(rel));
      }
    }
    c.expect(same, tag + " parallel/serial bytes");

    const auto train_ids = serial.watermark_ids(Split::train);
    const auto test_ids = serial.watermark_ids(Split::test);
    bool disjoint = !train_ids.empty() && !test_ids.empty();
    for (const auto& id : test_ids) disjoint = disjoint && !train_ids.contains(id);
    c.expect(disjoint, tag + " identity-disjoint splits");
    fs::remove_all(serial.root);
    fs::remove_all(parallel.root);
  }
  fs::remove_all(root);
  return c.outcome("100 random configurations, " + std::to_string(pixels_checked) +
                   " outside-footprint pixels compared");
}

}  // namespace wmr::acceptance
