#include "srlfd/sim/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "srlfd/errors.hpp"

namespace srlfd::sim {

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Box-filter approximation of area coverage for a shape whose boundary is
// at distance `radius` from its skeleton.
double coverage(double distance, double radius) { return std::clamp(radius + 0.5 - distance, 0.0, 1.0); }

struct PixelBox {
  int r0, r1, c0, c1;  // inclusive
};

PixelBox box_around(double cx, double cy, double reach) {
  auto lo = [](double v) { return std::clamp(static_cast<int>(std::floor(v)), 0, kImageSide - 1); };
  return {lo(cy - reach), lo(cy + reach), lo(cx - reach), lo(cx + reach)};
}

void blend(Image& img, int r, int c, double cov, double intensity) {
  if (cov <= 0.0) return;
  double& v = img.at(r, c);
  v = v * (1.0 - cov) + intensity * cov;
}

void draw_disc(Image& img, double cx, double cy, double radius, double intensity) {
  const PixelBox b = box_around(cx, cy, radius + 1.0);
  for (int r = b.r0; r <= b.r1; ++r)
    for (int c = b.c0; c <= b.c1; ++c)
      blend(img, r, c, coverage(std::hypot(c + 0.5 - cx, r + 0.5 - cy), radius), intensity);
}

}  // namespace

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void quantize(const Image& img, std::uint8_t* out) {
  for (std::size_t i = 0; i < kImagePixels; ++i) out[i] = quantize(img.pixels[i]);
}

Image dequantize(const std::uint8_t* data) {
  Image img;
  for (std::size_t i = 0; i < kImagePixels; ++i) img.pixels[i] = data[i] / 255.0;
  return img;
}

Vec2 to_pixel(const RenderParams& rp, Vec2 p) {
  const double scale = kImageSide / (2.0 * rp.workspace);
  return {(p.x + rp.workspace) * scale, (rp.workspace - p.y) * scale};
}

DistractorState spawn_distractor(const DistractorParams& dp, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, static_cast<double>(kImageSide));
  DistractorState d;
  d.x = u(rng);
  d.y = u(rng);
  d.radius = dp.radius;
  return d;
}

DistractorState distractor_step(const DistractorState& d, const DistractorParams& dp, Rng& rng) {
  std::normal_distribution<double> kick(0.0, 1.0);
  DistractorState n = d;
  n.vx += dp.step_sigma * kick(rng);
  n.vy += dp.step_sigma * kick(rng);
  const double speed = std::hypot(n.vx, n.vy);
  if (speed > dp.max_speed) {
    n.vx *= dp.max_speed / speed;
    n.vy *= dp.max_speed / speed;
  }
  auto reflect = [](double& pos, double& vel) {
    const double hi = static_cast<double>(kImageSide);
    pos += vel;
    while (pos < 0.0 || pos > hi) {
      pos = pos < 0.0 ? -pos : 2.0 * hi - pos;
      vel = -vel;
    }
  };
  reflect(n.x, n.vx);
  reflect(n.y, n.vy);
  return n;
}

Image render(const ArmParams& arm, const RenderParams& rp, const JointState& s,
             const TaskInstance& task, const std::optional<DistractorState>& distractor, Rng& rng) {
  Image img;
  if (distractor) draw_disc(img, distractor->x, distractor->y, distractor->radius, rp.distractor_intensity);
  if (rp.render_goal) {
    const Vec2 g = to_pixel(rp, task.goal);
    draw_disc(img, g.x, g.y, rp.goal_radius_px, rp.goal_intensity);
  }

  const Vec2 base = to_pixel(rp, {0.0, 0.0});
  const Vec2 elbow = to_pixel(rp, elbow_position(arm, s.alpha1));
  const Vec2 tip = to_pixel(rp, end_effector(arm, s));
  const double hw = 0.5 * rp.arm_width_px;
  const PixelBox b{
      std::clamp(static_cast<int>(std::floor(std::min({base.y, elbow.y, tip.y}) - hw - 1)), 0, kImageSide - 1),
      std::clamp(static_cast<int>(std::floor(std::max({base.y, elbow.y, tip.y}) + hw + 1)), 0, kImageSide - 1),
      std::clamp(static_cast<int>(std::floor(std::min({base.x, elbow.x, tip.x}) - hw - 1)), 0, kImageSide - 1),
      std::clamp(static_cast<int>(std::floor(std::max({base.x, elbow.x, tip.x}) + hw + 1)), 0, kImageSide - 1)};
  for (int r = b.r0; r <= b.r1; ++r) {
    for (int c = b.c0; c <= b.c1; ++c) {
      const Vec2 p{c + 0.5, r + 0.5};
      // Union of the two capsules, so the elbow is not blended twice.
      const double d = std::min(point_segment_distance(p, base, elbow), point_segment_distance(p, elbow, tip));
      blend(img, r, c, coverage(d, hw), rp.arm_intensity);
    }
  }

  if (rp.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, rp.noise_sigma);
    for (auto& v : img.pixels) v = std::clamp(v + noise(rng), 0.0, 1.0);
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("libpng failed writing '" + path + "'");
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, kImageSide, kImageSide, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(kImageSide);
  for (int r = 0; r < kImageSide; ++r) {
    for (int c = 0; c < kImageSide; ++c) row[static_cast<std::size_t>(c)] = quantize(img.at(r, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(f) != 0) throw IoError("error closing '" + path + "'");
}

}  // namespace srlfd::sim
