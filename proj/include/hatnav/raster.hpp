#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hatnav/heightmap.hpp"
#include "hatnav/neural_field.hpp"
#include "hatnav/planner.hpp"

namespace hatnav {

using Rgb = std::array<std::uint8_t, 3>;

/// Row-major RGB image; row 0 is the top (largest y).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0});
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr Rgb kColorFree{40, 170, 60};
inline constexpr Rgb kColorDuck{235, 200, 40};
inline constexpr Rgb kColorBlocked{0, 0, 0};
inline constexpr Rgb kColorPathDuck{255, 240, 0};
inline constexpr Rgb kColorPathHigh{30, 80, 255};

/// One pixel per cell, scaled up by an integer factor.
Image render_classes(const TraversabilityGrid& grid, int scale = 4);

/// Overlays the path; segments where either end ducks are drawn in the duck
/// color. `h_max` decides what counts as ducking.
void draw_trajectory(Image& img, const TraversabilityGrid& grid, const Trajectory& traj, double h_max, int scale = 4);

/// Probability of `channel` (0 block, 1 duck) at every cell center, mapped
/// red (1) to blue (0).
Image render_field(const NeuralField& field, const TraversabilityGrid& grid, int channel = 0, int scale = 4);

std::string encode_ppm(const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

}  // namespace hatnav
