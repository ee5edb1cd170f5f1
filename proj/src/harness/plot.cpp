#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "srlfd/harness/report.hpp"

namespace srlfd::harness {

namespace {

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;

  Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_ * h_ * 3), 255) {}

  void blend(int x, int y, std::array<std::uint8_t, 3> c, double alpha) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto* p = &px[static_cast<std::size_t>((y * w + x) * 3)];
    for (int k = 0; k < 3; ++k) p[k] = static_cast<std::uint8_t>(std::lround((1 - alpha) * p[k] + alpha * c[k]));
  }

  void line(double x0, double y0, double x1, double y1, std::array<std::uint8_t, 3> c, int thick) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dx = 0; dx < thick; ++dx)
        for (int dy = 0; dy < thick; ++dy) blend(x + dx - thick / 2, y + dy - thick / 2, c, 1.0);
    }
  }
};

}  // namespace

void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series, int width, int height) {
  if (width < 100 || height < 100) throw ConfigError("plot canvas must be at least 100x100");
  Canvas cv(width, height);
  const int left = 50, right = 20, top = 20, bottom = 40;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = 0.0, xmax = 1.0;
  bool any = false;
  for (const auto& s : series)
    for (double x : s.x) {
      xmin = any ? std::min(xmin, x) : x;
      xmax = any ? std::max(xmax, x) : x;
      any = true;
    }
  if (xmax <= xmin) xmax = xmin + 1.0;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };

  const std::array<std::uint8_t, 3> grid{225, 225, 225}, axis{0, 0, 0};
  for (int k = 1; k <= 4; ++k) cv.line(left, sy(k / 4.0), left + pw, sy(k / 4.0), grid, 1);
  for (int k = 1; k <= 4; ++k) cv.line(sx(xmin + k * (xmax - xmin) / 4), top, sx(xmin + k * (xmax - xmin) / 4), top + ph, grid, 1);

  for (const auto& s : series) {
    if (s.err.size() != s.y.size()) continue;
    for (std::size_t i = 1; i < s.x.size(); ++i) {
      const int c0 = static_cast<int>(std::lround(sx(s.x[i - 1]))), c1 = static_cast<int>(std::lround(sx(s.x[i])));
      for (int c = c0; c <= c1; ++c) {
        const double t = c1 == c0 ? 0.0 : static_cast<double>(c - c0) / (c1 - c0);
        const double m = s.y[i - 1] + t * (s.y[i] - s.y[i - 1]);
        const double e = s.err[i - 1] + t * (s.err[i] - s.err[i - 1]);
        for (int r = static_cast<int>(sy(m + e)); r <= static_cast<int>(sy(m - e)); ++r) cv.blend(c, r, s.rgb, 0.2);
      }
    }
  }
  for (const auto& s : series)
    for (std::size_t i = 1; i < s.x.size(); ++i) cv.line(sx(s.x[i - 1]), sy(s.y[i - 1]), sx(s.x[i]), sy(s.y[i]), s.rgb, 2);

  cv.line(left, top, left, top + ph, axis, 1);
  cv.line(left, top + ph, left + pw, top + ph, axis, 1);
  for (int k = 0; k <= 4; ++k) {
    cv.line(left - 5, sy(k / 4.0), left, sy(k / 4.0), axis, 1);
    cv.line(sx(xmin + k * (xmax - xmin) / 4), top + ph, sx(xmin + k * (xmax - xmin) / 4), top + ph + 5, axis, 1);
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), std::fclose);
  if (!fp) throw IoError("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, &cv.px[static_cast<std::size_t>(y * width * 3)]);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace srlfd::harness
