#pragma once

#include <string>

#include "wmr/image.hpp"
#include "wmr/rng.hpp"
#include "wmr/watermark.hpp"

namespace wmr {

/// Synthetic natural-ish RGB base: a smooth colour gradient, a few soft
/// blobs and mild texture. Used when no photo corpus is supplied.
[[nodiscard]] Image procedural_base(RngStream rng, int height, int width);

/// Synthetic logo-like RGBA watermark: strokes, rings and bars in one or two
/// colours with anti-aliased coverage.
[[nodiscard]] WatermarkAsset procedural_watermark(RngStream rng, std::string id, int height,
                                                  int width);

}  // namespace wmr
