#include "image.h"

#include <png.h>

#include <cstdio>
#include <memory>

namespace licattack {

void validate_image(const Image& img, bool require_range) {
  const Tensor& t = img.px;
  require(t.c == 1 || t.c == 3, ErrorCode::kValidation,
          "image must have 1 or 3 channels");
  require(t.h >= kMinImageDim && t.w >= kMinImageDim, ErrorCode::kValidation,
          "image smaller than " + std::to_string(kMinImageDim) + " pixels");
  require(t.all_finite(), ErrorCode::kValidation,
          "image contains non-finite values");
  if (require_range) {
    for (double x : t.v)
      require(x >= 0.0 && x <= 1.0, ErrorCode::kValidation,
              "pixel value outside [0,1]");
  }
}

Image make_image(Tensor px) {
  Image img{std::move(px), 8};
  validate_image(img);
  return img;
}

namespace {

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

Image load_png(const std::string& path) {
  PngReadCloser st;
  st.fp = std::fopen(path.c_str(), "rb");
  require(st.fp != nullptr, ErrorCode::kIo, "cannot open PNG: " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, st.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::kFormat, "not a PNG file: " + path);

  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(st.png != nullptr, ErrorCode::kInternal, "png_create_read_struct failed");
  st.info = png_create_info_struct(st.png);
  require(st.info != nullptr, ErrorCode::kInternal, "png_create_info_struct failed");

  if (setjmp(png_jmpbuf(st.png)))
    fail(ErrorCode::kFormat, "corrupt PNG: " + path);

  png_init_io(st.png, st.fp);
  png_set_sig_bytes(st.png, 8);
  png_read_info(st.png, st.info);

  const int bit_depth = png_get_bit_depth(st.png, st.info);
  const int color_type = png_get_color_type(st.png, st.info);
  const int width = static_cast<int>(png_get_image_width(st.png, st.info));
  const int height = static_cast<int>(png_get_image_height(st.png, st.info));

  require(bit_depth == 8, ErrorCode::kFormat,
          "only 8-bit PNGs are supported: " + path);
  int channels;
  if (color_type == PNG_COLOR_TYPE_GRAY) {
    channels = 1;
  } else if (color_type == PNG_COLOR_TYPE_RGB) {
    channels = 3;
  } else {
    fail(ErrorCode::kFormat,
         "unsupported PNG color type (need 8-bit gray or RGB): " + path);
  }

  png_set_interlace_handling(st.png);
  png_read_update_info(st.png, st.info);

  const size_t rowbytes = png_get_rowbytes(st.png, st.info);
  require(rowbytes == static_cast<size_t>(width) * channels, ErrorCode::kFormat,
          "unexpected PNG row size: " + path);

  std::vector<unsigned char> raw(static_cast<size_t>(height) * rowbytes);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(st.png, rows.data());
  png_read_end(st.png, nullptr);

  Tensor px(channels, height, width);
  for (int y = 0; y < height; ++y) {
    const unsigned char* row = rows[y];
    for (int x = 0; x < width; ++x)
      for (int ci = 0; ci < channels; ++ci)
        px.at(ci, y, x) = row[x * channels + ci] / 255.0;
  }
  return make_image(std::move(px));
}

void save_png(const Image& img, const std::string& path) {
  validate_image(img);
  const Tensor& t = img.px;

  PngWriteCloser st;
  st.fp = std::fopen(path.c_str(), "wb");
  require(st.fp != nullptr, ErrorCode::kIo, "cannot write PNG: " + path);

  st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(st.png != nullptr, ErrorCode::kInternal, "png_create_write_struct failed");
  st.info = png_create_info_struct(st.png);
  require(st.info != nullptr, ErrorCode::kInternal, "png_create_info_struct failed");

  if (setjmp(png_jmpbuf(st.png)))
    fail(ErrorCode::kIo, "PNG write failed: " + path);

  png_init_io(st.png, st.fp);
  png_set_IHDR(st.png, st.info, t.w, t.h, 8,
               t.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(st.png, st.info);

  std::vector<unsigned char> row(static_cast<size_t>(t.w) * t.c);
  for (int y = 0; y < t.h; ++y) {
    for (int x = 0; x < t.w; ++x) {
      for (int ci = 0; ci < t.c; ++ci) {
        long q = std::lround(t.at(ci, y, x) * 255.0);  // ties away from zero
        q = std::min(255l, std::max(0l, q));
        row[x * t.c + ci] = static_cast<unsigned char>(q);
      }
    }
    png_write_row(st.png, row.data());
  }
  png_write_end(st.png, nullptr);
}

Tensor clip01_tensor(const Tensor& t) {
  require(t.all_finite(), ErrorCode::kValidation,
          "clip01: non-finite input");
  Tensor out = t;
  clamp_inplace(out, 0.0, 1.0);
  return out;
}

Image clip01(const Image& img) {
  return Image{clip01_tensor(img.px), img.source_bit_depth};
}

Tensor quantize8_tensor(const Tensor& t) {
  Tensor out = t;
  for (double& x : out.v) {
    long q = std::lround(x * 255.0);
    q = std::min(255l, std::max(0l, q));
    x = q / 255.0;
  }
  return out;
}

Image quantize8(const Image& img) {
  return Image{quantize8_tensor(img.px), img.source_bit_depth};
}

}  // namespace licattack
