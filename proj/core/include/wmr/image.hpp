#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace wmr {

/// Planar (channel-major) raster with values in [0, 1].
///
/// Element (c, y, x) lives at data()[(c * height + y) * width + x]. This is
/// the same layout as one batch element of an NCHW tensor, so conversion to
/// the network representation is a copy plus an affine map.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] double& at(int c, int y, int x) noexcept {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  [[nodiscard]] double at(int c, int y, int x) const noexcept {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<const double> plane(int c) const noexcept {
    return std::span<const double>(data_).subspan(
        static_cast<std::size_t>(c) * height_ * width_,
        static_cast<std::size_t>(height_) * width_);
  }

  /// True when dimensions are legal and every value is finite and in [0, 1].
  [[nodiscard]] bool valid() const noexcept;

  [[nodiscard]] bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// 8-bit quantization used on save: round(v * 255) with halves rounded away
/// from zero, after clamping to [0, 1].
[[nodiscard]] std::uint8_t quantize(double v) noexcept;

/// Image with every value snapped to the nearest 8-bit level.
[[nodiscard]] Image quantized(const Image& img);

/// Decodes an 8-bit PNG or JPEG. Grayscale is replicated to three channels;
/// gray+alpha becomes RGBA.
///
/// Throws FileNotFoundError, DecodeError, or UnsupportedFormatError.
[[nodiscard]] Image load_image(const std::filesystem::path& path);

/// Writes PNG (lossless) unless the extension is .jpg/.jpeg.
/// Throws IoError when the path cannot be written.
void save_image(const Image& img, const std::filesystem::path& path);

/// Bilinear resampling on the pixel-center grid: output pixel i samples the
/// source at (i + 0.5) * in / out - 0.5, clamped to the border.
[[nodiscard]] Image resize(const Image& img, int height, int width);

/// Drops alpha or replicates gray so the result has exactly three channels.
[[nodiscard]] Image to_rgb(const Image& img);

}  // namespace wmr
