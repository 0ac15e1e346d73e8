/*
 * Copyright 2026 The Keylane Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "keylane/io/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#ifdef KEYLANE_HAS_PNG
#include <png.h>
#endif
#ifdef KEYLANE_HAS_JPEG
#include <csetjmp>
#include <jpeglib.h>
#endif

namespace keylane::io {

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

int next_pnm_token(std::istream& in) {
  // skips whitespace and '#' comments
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file: " + path);
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw ParseError("unsupported PNM magic in " + path);
  }
  const int channels = kind == '6' ? 3 : 1;
  const int w = next_pnm_token(in);
  const int h = next_pnm_token(in);
  const int maxv = next_pnm_token(in);
  if (w <= 0 || h <= 0 || maxv <= 0 || maxv > 255) {
    throw ParseError("bad PNM header in " + path);
  }
  in.get();  // single whitespace after header
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw ParseError("truncated PNM payload in " + path);

  Image im = Image::zeros(w, h, 3);
  const float scale = 1.0f / static_cast<float>(maxv);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src_c = channels == 3 ? c : 0;
        im.at(c, y, x) =
            raw[(static_cast<std::size_t>(y) * w + x) * channels + src_c] * scale;
      }
    }
  }
  return im;
}

void write_ppm(const std::string& path, const Image& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path);
  out << "P6\n" << im.width << " " << im.height << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(im.width) * im.height * 3);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(im.at(std::min(c, im.channels - 1), y, x), 0.0f, 1.0f);
        raw[(static_cast<std::size_t>(y) * im.width + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("short write on " + path);
}

#ifdef KEYLANE_HAS_PNG
Image read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open image file: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ParseError("libpng failed to decode " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Image im = Image::zeros(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        im.at(c, y, x) = raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
      }
    }
  }
  return im;
}

void write_png(const std::string& path, const Image& im) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write image file: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng failed to encode " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, im.width, im.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(im.width) * 3);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(im.at(std::min(c, im.channels - 1), y, x), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}
#endif  // KEYLANE_HAS_PNG

#ifdef KEYLANE_HAS_JPEG
struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Image read_jpeg(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open image file: " + path);
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw ParseError("libjpeg failed to decode " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  Image im = Image::zeros(w, h, 3);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  unsigned char* rowp = row.data();
  for (int y = 0; y < h; ++y) {
    jpeg_read_scanlines(&cinfo, &rowp, 1);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        im.at(c, y, x) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0f;
      }
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  return im;
}
#endif  // KEYLANE_HAS_JPEG

}  // namespace

Image read_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return read_pnm(path);
#ifdef KEYLANE_HAS_PNG
  if (ext == "png") return read_png(path);
#endif
#ifdef KEYLANE_HAS_JPEG
  if (ext == "jpg" || ext == "jpeg") return read_jpeg(path);
#endif
  throw IoError("unsupported image format '" + ext + "' for " + path);
}

void write_image(const std::string& path, const Image& im) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm") {
    write_ppm(path, im);
    return;
  }
#ifdef KEYLANE_HAS_PNG
  if (ext == "png") {
    write_png(path, im);
    return;
  }
#endif
  throw IoError("unsupported output image format '" + ext + "' for " + path);
}

Image resize_bilinear(const Image& im, int out_w, int out_h) {
  if (im.width == out_w && im.height == out_h) return im;
  Image out = Image::zeros(out_w, out_h, im.channels);
  const double sx = static_cast<double>(im.width) / out_w;
  const double sy = static_cast<double>(im.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), im.height - 1);
    const int y1 = std::min(y0 + 1, im.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), im.width - 1);
      const int x1 = std::min(x0 + 1, im.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < im.channels; ++c) {
        const double v = (1 - wy) * ((1 - wx) * im.at(c, y0, x0) + wx * im.at(c, y0, x1)) +
                         wy * ((1 - wx) * im.at(c, y1, x0) + wx * im.at(c, y1, x1));
        out.at(c, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

Image to_input_image(const Image& im) {
  Image out = resize_bilinear(im, kInputWidth, kInputHeight);
  for (float& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  validate_input_image(out);
  return out;
}

}  // namespace keylane::io
