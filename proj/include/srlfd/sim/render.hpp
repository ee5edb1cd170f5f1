#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srlfd/rng.hpp"
#include "srlfd/sim/arm.hpp"

namespace srlfd::sim {

inline constexpr int kImageSide = 64;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

// Row-major grayscale frame, row 0 at the top, values in [0, 1].
struct Image {
  std::vector<double> pixels = std::vector<double>(kImagePixels, 1.0);

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row * kImageSide + col)]; }
  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row * kImageSide + col)]; }
  bool operator==(const Image&) const = default;
};

// 8-bit storage: round(v * 255).
std::uint8_t quantize(double v);
void quantize(const Image& img, std::uint8_t* out);
Image dequantize(const std::uint8_t* data);

// Moving disc in pixel coordinates; the centre stays inside [0, 64]^2.
struct DistractorState {
  double x = 32.0;
  double y = 32.0;
  double vx = 0.0;
  double vy = 0.0;
  double radius = 4.0;
};

struct DistractorParams {
  double step_sigma = 0.5;  // px/step velocity perturbation
  double max_speed = 2.0;   // px/step
  double radius = 4.0;
};

struct RenderParams {
  double noise_sigma = 0.05;
  bool render_goal = true;
  double workspace = 1.1;  // the square [-w, w]^2 fills the frame
  double arm_width_px = 3.0;
  double goal_radius_px = 2.0;
  double arm_intensity = 0.0;
  double goal_intensity = 0.5;
  double distractor_intensity = 0.25;
};

// Continuous pixel coordinates (col, row) of a workspace point; pixel
// (r, c) covers [c, c+1) x [r, r+1).
Vec2 to_pixel(const RenderParams& rp, Vec2 p);

DistractorState spawn_distractor(const DistractorParams& dp, Rng& rng);
// Gaussian velocity kick, speed cap, position update, reflection at the frame.
DistractorState distractor_step(const DistractorState& d, const DistractorParams& dp, Rng& rng);

// Draws distractor, goal and arm in that order, then adds clamped pixel
// noise. `rng` is only consumed when noise_sigma > 0.
Image render(const ArmParams& arm, const RenderParams& rp, const JointState& s,
             const TaskInstance& task, const std::optional<DistractorState>& distractor, Rng& rng);

// 8-bit grayscale PNG.
void write_png(const std::string& path, const Image& img);

}  // namespace srlfd::sim
