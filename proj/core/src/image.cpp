#include "wmr/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "wmr/errors.hpp"

namespace wmr {

namespace fs = std::filesystem;

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || (channels != 1 && channels != 3 && channels != 4)) {
    throw ShapeError("invalid image dimensions " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

bool Image::valid() const noexcept {
  if (height_ < 1 || width_ < 1) return false;
  if (channels_ != 1 && channels_ != 3 && channels_ != 4) return false;
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::uint8_t quantize(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  // std::round rounds halves away from zero.
  return static_cast<std::uint8_t>(std::round(v * 255.0));
}

Image quantized(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = quantize(v) / 255.0;
  return out;
}

namespace {

enum class FileKind { png, jpeg, unknown };

FileKind sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = in.gcount();
  if (got >= 8 && png_sig_cmp(head.data(), 0, 8) == 0) return FileKind::png;
  if (got >= 3 && head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return FileKind::jpeg;
  return FileKind::unknown;
}

// Interleaved 8-bit buffer -> planar Image. Gray is widened to RGB.
Image from_interleaved(const std::uint8_t* buf, int h, int w, int src_channels) {
  const int dst_channels = src_channels == 1 ? 3 : (src_channels == 2 ? 4 : src_channels);
  Image img(h, w, dst_channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* px = buf + (static_cast<std::size_t>(y) * w + x) * src_channels;
      for (int c = 0; c < dst_channels; ++c) {
        int src_c = c;
        if (src_channels == 1) src_c = 0;
        if (src_channels == 2) src_c = c < 3 ? 0 : 1;
        img.at(c, y, x) = px[src_c] / 255.0;
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> to_interleaved(const Image& img) {
  const int h = img.height(), w = img.width(), ch = img.channels();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        buf[(static_cast<std::size_t>(y) * w + x) * ch + c] = quantize(img.at(c, y, x));
  return buf;
}

Image load_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DecodeError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw UnsupportedFormatError("16-bit PNG not supported: " + path.string());
  }
  const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  int channels = 0;
  if (color) {
    png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    channels = alpha ? 4 : 3;
  } else {
    png.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    channels = alpha ? 2 : 1;
  }
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_interleaved(buf.data(), static_cast<int>(png.height),
                          static_cast<int>(png.width), channels);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct JpegPixels {
  std::vector<std::uint8_t> buf;
  int h = 0, w = 0, channels = 0;
  bool unsupported = false;
};

// Returns false on a libjpeg error; everything mutated after setjmp lives in
// `out`, so nothing local can be clobbered by the longjmp.
bool decode_jpeg(std::FILE* file, JpegPixels& out, JpegErrorManager& err) {
  jpeg_decompress_struct cinfo{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.data_precision != 8 || cinfo.jpeg_color_space == JCS_CMYK ||
      cinfo.jpeg_color_space == JCS_YCCK) {
    out.unsupported = true;
  } else {
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out.h = static_cast<int>(cinfo.output_height);
    out.w = static_cast<int>(cinfo.output_width);
    out.channels = cinfo.output_components;
    out.buf.resize(static_cast<std::size_t>(out.h) * out.w * out.channels);
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row =
          out.buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.w * out.channels;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image load_jpeg(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw FileNotFoundError("cannot open " + path.string());
  JpegPixels px;
  JpegErrorManager err{};
  if (!decode_jpeg(file.get(), px, err)) {
    throw DecodeError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  if (px.unsupported) {
    throw UnsupportedFormatError("unsupported JPEG precision or color space: " + path.string());
  }
  return from_interleaved(px.buf.data(), px.h, px.w, px.channels);
}

void save_png(const Image& img, const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  switch (img.channels()) {
    case 1: png.format = PNG_FORMAT_GRAY; break;
    case 3: png.format = PNG_FORMAT_RGB; break;
    default: png.format = PNG_FORMAT_RGBA; break;
  }
  const auto buf = to_interleaved(img);
  if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

void save_jpeg(const Image& img, const fs::path& path) {
  const Image rgb = img.channels() == 3 ? img : to_rgb(img);
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open for writing: " + path.string());
  const auto buf = to_interleaved(rgb);

  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw IoError("cannot write JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(rgb.width());
  cinfo.image_height = static_cast<JDIMENSION>(rgb.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(buf.data() +
                                     static_cast<std::size_t>(cinfo.next_scanline) * rgb.width() * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

}  // namespace

Image load_image(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw FileNotFoundError("no such image file: " + path.string());
  }
  switch (sniff(path)) {
    case FileKind::png: return load_png(path);
    case FileKind::jpeg: return load_jpeg(path);
    case FileKind::unknown: break;
  }
  throw DecodeError("not a PNG or JPEG file: " + path.string());
}

void save_image(const Image& img, const fs::path& path) {
  if (img.empty()) throw ShapeError("cannot save an empty image");
  const std::string ext = lower_extension(path);
  if (ext == ".jpg" || ext == ".jpeg") {
    save_jpeg(img, path);
  } else {
    save_png(img, path);
  }
}

Image resize(const Image& img, int height, int width) {
  if (height < 1 || width < 1) throw ShapeError("resize target must be at least 1x1");
  if (height == img.height() && width == img.width()) return img;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      double src = (i + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(src));
      const int hi = std::min(lo + 1, in - 1);
      t[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
    }
    return t;
  };
  const auto ty = taps(img.height(), height);
  const auto tx = taps(img.width(), width);

  Image out(height, width, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const Tap& a = ty[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) {
        const Tap& b = tx[static_cast<std::size_t>(x)];
        const double top = img.at(c, a.lo, b.lo) * (1 - b.frac) + img.at(c, a.lo, b.hi) * b.frac;
        const double bot = img.at(c, a.hi, b.lo) * (1 - b.frac) + img.at(c, a.hi, b.hi) * b.frac;
        out.at(c, y, x) = std::clamp(top * (1 - a.frac) + bot * a.frac, 0.0, 1.0);
      }
    }
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.height(), img.width(), 3);
  for (int c = 0; c < 3; ++c) {
    const int src = img.channels() == 1 ? 0 : c;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.at(c, y, x) = img.at(src, y, x);
  }
  return out;
}

}  // namespace wmr
