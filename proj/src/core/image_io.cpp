#include "core/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include <png.h>

#ifdef TERRASEG_WITH_JPEG
#include <csetjmp>
#include <jpeglib.h>
#endif

namespace ts {

namespace {

struct FileHandle {
  FILE* f = nullptr;
  ~FileHandle() {
    if (f) std::fclose(f);
  }
};

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

RawImage load_png(FILE* f, const std::string& name) {
  PngRead r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) fail(ErrorKind::internal, "png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(ErrorKind::internal, "png_create_info_struct failed");

  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  RawImage out;

  if (setjmp(png_jmpbuf(r.png)))
    fail(ErrorKind::io, "failed to decode PNG: " + name);

  png_init_io(r.png, f);
  png_read_info(r.png, r.info);

  const png_byte color = png_get_color_type(r.png, r.info);
  const png_byte depth = png_get_bit_depth(r.png, r.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  out.width = png_get_image_width(r.png, r.info);
  out.height = png_get_image_height(r.png, r.info);
  out.bit_depth = png_get_bit_depth(r.png, r.info);
  out.channels = png_get_channels(r.png, r.info);
  if (out.channels != 1 && out.channels != 3)
    fail(ErrorKind::format, "unsupported PNG channel count " +
                                std::to_string(out.channels) + ": " + name);
  if (out.bit_depth != 8 && out.bit_depth != 16)
    fail(ErrorKind::format, "unsupported PNG bit depth " +
                                std::to_string(out.bit_depth) + ": " + name);

  const size_t rowbytes = png_get_rowbytes(r.png, r.info);
  buffer.resize(rowbytes * static_cast<size_t>(out.height));
  rows.resize(static_cast<size_t>(out.height));
  for (int64_t y = 0; y < out.height; ++y)
    rows[static_cast<size_t>(y)] = buffer.data() + static_cast<size_t>(y) * rowbytes;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  const size_t samples = static_cast<size_t>(out.width * out.height) * out.channels;
  out.pixels.resize(samples);
  if (out.bit_depth == 8) {
    for (size_t i = 0; i < samples; ++i) out.pixels[i] = buffer[i];
  } else {
    // PNG stores 16-bit samples big-endian
    for (size_t i = 0; i < samples; ++i)
      out.pixels[i] = static_cast<uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  }
  return out;
}

void skip_pnm_space(FILE* f) {
  int c;
  while ((c = std::fgetc(f)) != EOF) {
    if (c == '#') {
      while ((c = std::fgetc(f)) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      std::ungetc(c, f);
      return;
    }
  }
}

int64_t read_pnm_int(FILE* f, const std::string& name) {
  skip_pnm_space(f);
  int64_t v = 0;
  int c = std::fgetc(f);
  if (c == EOF || !std::isdigit(c))
    fail(ErrorKind::io, "malformed PNM header: " + name);
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > (int64_t(1) << 31)) fail(ErrorKind::io, "malformed PNM header: " + name);
    c = std::fgetc(f);
  }
  if (c != EOF) std::ungetc(c, f);
  return v;
}

RawImage load_pnm(FILE* f, const std::string& name) {
  char m0 = static_cast<char>(std::fgetc(f));
  char m1 = static_cast<char>(std::fgetc(f));
  const int channels = (m1 == '6') ? 3 : 1;
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    fail(ErrorKind::io, "unrecognized PNM variant: " + name);
  RawImage out;
  out.channels = channels;
  out.width = read_pnm_int(f, name);
  out.height = read_pnm_int(f, name);
  const int64_t maxval = read_pnm_int(f, name);
  if (out.width < 1 || out.height < 1)
    fail(ErrorKind::io, "malformed PNM dimensions: " + name);
  if (maxval == 255) {
    out.bit_depth = 8;
  } else if (maxval == 65535) {
    out.bit_depth = 16;
  } else {
    fail(ErrorKind::format, "unsupported PNM maxval " + std::to_string(maxval) + ": " + name);
  }
  const int c = std::fgetc(f);  // single whitespace before raster
  if (c == EOF || !std::isspace(c))
    fail(ErrorKind::io, "malformed PNM header: " + name);
  const size_t samples = static_cast<size_t>(out.width * out.height) * channels;
  const size_t bytes = samples * (out.bit_depth == 16 ? 2 : 1);
  std::vector<unsigned char> buffer(bytes);
  if (std::fread(buffer.data(), 1, bytes, f) != bytes)
    fail(ErrorKind::io, "truncated PNM raster: " + name);
  out.pixels.resize(samples);
  if (out.bit_depth == 8) {
    for (size_t i = 0; i < samples; ++i) out.pixels[i] = buffer[i];
  } else {
    // 16-bit PNM samples are big-endian
    for (size_t i = 0; i < samples; ++i)
      out.pixels[i] = static_cast<uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  }
  return out;
}

#ifdef TERRASEG_WITH_JPEG

struct JpegErr {
  jpeg_error_mgr mgr;
  jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
  longjmp(err->jump, 1);
}

RawImage load_jpeg(FILE* f, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErr jerr;
  cinfo.err = jpeg_std_error(&jerr.mgr);
  jerr.mgr.error_exit = jpeg_error_exit;
  std::vector<unsigned char> buffer;
  RawImage out;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::io, "failed to decode JPEG: " + name);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.channels = cinfo.output_components;
  out.bit_depth = 8;
  if (out.channels != 1 && out.channels != 3) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::format, "unsupported JPEG channel count: " + name);
  }
  const size_t rowbytes = static_cast<size_t>(out.width) * out.channels;
  buffer.resize(rowbytes * static_cast<size_t>(out.height));
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = buffer.data() + static_cast<size_t>(cinfo.output_scanline) * rowbytes;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  out.pixels.assign(buffer.begin(), buffer.end());
  return out;
}

#endif  // TERRASEG_WITH_JPEG

void save_png(const RawImage& img, const std::string& name) {
  if (img.channels != 1 && img.channels != 3)
    fail(ErrorKind::invalid_argument, "PNG output supports 1 or 3 channels");
  FileHandle fh;
  fh.f = std::fopen(name.c_str(), "wb");
  if (!fh.f) fail(ErrorKind::io, "cannot open for writing: " + name);
  PngWrite w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) fail(ErrorKind::internal, "png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) fail(ErrorKind::internal, "png_create_info_struct failed");

  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(w.png)))
    fail(ErrorKind::io, "failed to encode PNG: " + name);

  png_init_io(w.png, fh.f);
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), img.bit_depth,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);

  const size_t samples = static_cast<size_t>(img.width * img.height) * img.channels;
  if (img.bit_depth == 8) {
    buffer.resize(samples);
    for (size_t i = 0; i < samples; ++i)
      buffer[i] = static_cast<unsigned char>(img.pixels[i] & 0xff);
  } else {
    buffer.resize(samples * 2);
    for (size_t i = 0; i < samples; ++i) {
      buffer[2 * i] = static_cast<unsigned char>(img.pixels[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(img.pixels[i] & 0xff);
    }
  }
  const size_t rowbytes = static_cast<size_t>(img.width) * img.channels *
                          (img.bit_depth == 16 ? 2 : 1);
  rows.resize(static_cast<size_t>(img.height));
  for (int64_t y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = buffer.data() + static_cast<size_t>(y) * rowbytes;
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void save_pnm(const RawImage& img, const std::string& name) {
  FileHandle fh;
  fh.f = std::fopen(name.c_str(), "wb");
  if (!fh.f) fail(ErrorKind::io, "cannot open for writing: " + name);
  const int maxval = img.bit_depth == 16 ? 65535 : 255;
  std::fprintf(fh.f, "%s\n%lld %lld\n%d\n", img.channels == 3 ? "P6" : "P5",
               static_cast<long long>(img.width), static_cast<long long>(img.height), maxval);
  const size_t samples = static_cast<size_t>(img.width * img.height) * img.channels;
  std::vector<unsigned char> buffer;
  if (img.bit_depth == 8) {
    buffer.resize(samples);
    for (size_t i = 0; i < samples; ++i)
      buffer[i] = static_cast<unsigned char>(img.pixels[i] & 0xff);
  } else {
    buffer.resize(samples * 2);
    for (size_t i = 0; i < samples; ++i) {
      buffer[2 * i] = static_cast<unsigned char>(img.pixels[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(img.pixels[i] & 0xff);
    }
  }
  if (std::fwrite(buffer.data(), 1, buffer.size(), fh.f) != buffer.size())
    fail(ErrorKind::io, "short write: " + name);
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

}  // namespace

RawImage load_image(const std::filesystem::path& path) {
  const std::string name = path.string();
  FileHandle fh;
  fh.f = std::fopen(name.c_str(), "rb");
  if (!fh.f) fail(ErrorKind::io, "cannot open image: " + name);
  unsigned char magic[2] = {0, 0};
  const size_t got = std::fread(magic, 1, 2, fh.f);
  std::rewind(fh.f);
  if (got == 2 && magic[0] == 0x89 && magic[1] == 'P') return load_png(fh.f, name);
  if (got == 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
    return load_pnm(fh.f, name);
  if (got == 2 && magic[0] == 0xff && magic[1] == 0xd8) {
#ifdef TERRASEG_WITH_JPEG
    return load_jpeg(fh.f, name);
#else
    fail(ErrorKind::format, "JPEG support is not enabled in this build: " + name);
#endif
  }
  fail(ErrorKind::io, "unrecognized image format: " + name);
}

void save_image(const RawImage& img, const std::filesystem::path& path) {
  if (img.width < 1 || img.height < 1)
    fail(ErrorKind::invalid_argument, "image extents must be positive");
  if (img.bit_depth != 8 && img.bit_depth != 16)
    fail(ErrorKind::invalid_argument, "bit depth must be 8 or 16");
  if (img.pixels.size() != static_cast<size_t>(img.width * img.height) * img.channels)
    fail(ErrorKind::invalid_argument, "pixel buffer does not match extents");
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    save_png(img, path.string());
  } else if (ext == ".pgm") {
    if (img.channels != 1)
      fail(ErrorKind::invalid_argument, "PGM output requires a single channel");
    save_pnm(img, path.string());
  } else if (ext == ".ppm") {
    if (img.channels != 3)
      fail(ErrorKind::invalid_argument, "PPM output requires three channels");
    save_pnm(img, path.string());
  } else {
    fail(ErrorKind::invalid_argument, "unsupported output extension: " + path.string());
  }
}

bool jpeg_supported() {
#ifdef TERRASEG_WITH_JPEG
  return true;
#else
  return false;
#endif
}

RawImage to_gray(const RawImage& img) {
  if (img.channels == 1) return img;
  RawImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 1;
  out.bit_depth = img.bit_depth;
  out.pixels.resize(static_cast<size_t>(img.width * img.height));
  for (int64_t i = 0; i < img.width * img.height; ++i) {
    const double r = img.pixels[static_cast<size_t>(3 * i)];
    const double g = img.pixels[static_cast<size_t>(3 * i + 1)];
    const double b = img.pixels[static_cast<size_t>(3 * i + 2)];
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    out.pixels[static_cast<size_t>(i)] = static_cast<uint16_t>(std::lround(y));
  }
  return out;
}

RawImage resize_nearest(const RawImage& img, int64_t out_h, int64_t out_w) {
  if (out_h < 1 || out_w < 1)
    fail(ErrorKind::invalid_argument, "resize extents must be positive");
  RawImage out;
  out.width = out_w;
  out.height = out_h;
  out.channels = img.channels;
  out.bit_depth = img.bit_depth;
  out.pixels.resize(static_cast<size_t>(out_h * out_w) * img.channels);
  for (int64_t y = 0; y < out_h; ++y) {
    int64_t sy = (2 * y + 1) * img.height / (2 * out_h);
    sy = std::clamp<int64_t>(sy, 0, img.height - 1);
    for (int64_t x = 0; x < out_w; ++x) {
      int64_t sx = (2 * x + 1) * img.width / (2 * out_w);
      sx = std::clamp<int64_t>(sx, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c)
        out.pixels[static_cast<size_t>((y * out_w + x) * img.channels + c)] =
            img.sample(sy, sx, c);
    }
  }
  return out;
}

}  // namespace ts
