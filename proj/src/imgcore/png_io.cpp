#include "sim2real/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cerrno>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "sim2real/error.hpp"

namespace sim2real {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; only trivially destructible state
// lives in the frames between setjmp and the error callback.
struct ErrorSink {
  std::jmp_buf jump;
  char message[256];
};

void OnPngError(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  std::longjmp(sink->jump, 1);
}

void OnPngWarning(png_structp, png_const_charp) {}

FilePtr OpenFile(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    Fail(ErrorKind::kIo, path + ": cannot open (" + std::strerror(errno) + ")");
  }
  return f;
}

struct RawPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char> pixels;  // tightly packed rows
  std::size_t row_bytes = 0;
};

// Returns false and fills `sink.message` on failure.
bool DecodeRaw(std::FILE* fp, bool header_only, RawPng& out, ErrorSink& sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink,
                                           OnPngError, OnPngWarning);
  if (png == nullptr) {
    std::snprintf(sink.message, sizeof(sink.message), "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep>* volatile rows = nullptr;
  if (setjmp(sink.jump)) {
    delete rows;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (!header_only) {
    out.row_bytes = png_get_rowbytes(png, info);
    out.pixels.resize(out.row_bytes * out.height);
    rows = new std::vector<png_bytep>(out.height);
    for (png_uint_32 y = 0; y < out.height; ++y)
      (*rows)[y] = out.pixels.data() + y * out.row_bytes;
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
    delete rows;
    rows = nullptr;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng ReadRaw(const std::string& path, bool header_only) {
  FilePtr fp = OpenFile(path, "rb");
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    Fail(ErrorKind::kFormat, path + ": not a PNG file");
  }
  std::rewind(fp.get());
  RawPng raw;
  ErrorSink sink{};
  if (!DecodeRaw(fp.get(), header_only, raw, sink)) {
    Fail(ErrorKind::kFormat, path + ": decode error (" + sink.message + ")");
  }
  return raw;
}

int ChannelsOf(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return 1;
    case PNG_COLOR_TYPE_RGB: return 3;
    default: return 0;
  }
}

const char* ColorTypeName(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return "gray";
    case PNG_COLOR_TYPE_RGB: return "rgb";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "rgba";
    default: return "unknown";
  }
}

}  // namespace

PngInfo ReadPngInfo(const std::string& path) {
  const RawPng raw = ReadRaw(path, /*header_only=*/true);
  return PngInfo{static_cast<int>(raw.width), static_cast<int>(raw.height),
                 ChannelsOf(raw.color_type), raw.bit_depth};
}

ImageBuffer LoadPng(const std::string& path, PngMode mode) {
  RawPng raw = ReadRaw(path, /*header_only=*/false);
  const int channels = ChannelsOf(raw.color_type);
  const bool ok8 = raw.bit_depth == 8 && channels != 0;
  const bool ok16 = mode == PngMode::kInstanceIds && raw.bit_depth == 16 &&
                    raw.color_type == PNG_COLOR_TYPE_GRAY;
  if (!ok8 && !ok16) {
    Fail(ErrorKind::kFormat,
         path + ": unsupported PNG layout (" + std::to_string(raw.bit_depth) +
             "-bit " + ColorTypeName(raw.color_type) + ")");
  }
  const int w = static_cast<int>(raw.width);
  const int h = static_cast<int>(raw.height);
  std::vector<double> data(static_cast<std::size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y) {
    const unsigned char* row = raw.pixels.data() + y * raw.row_bytes;
    double* dst = data.data() + static_cast<std::size_t>(y) * w * channels;
    if (raw.bit_depth == 8) {
      for (int i = 0; i < w * channels; ++i) dst[i] = row[i];
    } else {
      for (int i = 0; i < w; ++i) dst[i] = (row[2 * i] << 8) | row[2 * i + 1];
    }
  }
  return ImageBuffer(w, h, channels, std::move(data));
}

void SavePng(const ImageBuffer& img, const std::string& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    Fail(ErrorKind::kInvalidArgument, "PNG bit depth must be 8 or 16");
  }
  if (bit_depth == 16 && img.channels() != 1) {
    Fail(ErrorKind::kInvalidArgument, "16-bit PNG output is gray only");
  }
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const int bytes = bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(w) * ch * bytes;
  const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<unsigned char> pixels(row_bytes * h);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w * ch; ++i) {
      const double v = img.data()[static_cast<std::size_t>(y) * w * ch + i];
      const auto q = static_cast<unsigned>(std::clamp(std::round(v), 0.0, maxv));
      unsigned char* dst = pixels.data() + y * row_bytes + static_cast<std::size_t>(i) * bytes;
      if (bytes == 1) {
        dst[0] = static_cast<unsigned char>(q);
      } else {
        dst[0] = static_cast<unsigned char>(q >> 8);
        dst[1] = static_cast<unsigned char>(q & 0xff);
      }
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + y * row_bytes;

  FilePtr fp = OpenFile(path, "wb");
  ErrorSink sink{};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink,
                                            OnPngError, OnPngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorKind::kIo, path + ": out of memory");
  }
  if (setjmp(sink.jump)) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorKind::kIo, path + ": encode error (" + sink.message + ")");
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, w, h, bit_depth,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) {
    Fail(ErrorKind::kIo, path + ": write failed");
  }
}

}  // namespace sim2real
