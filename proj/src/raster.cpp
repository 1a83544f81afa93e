#include "hatnav/raster.hpp"

#include <algorithm>
#include <cmath>

#include "hatnav/error.hpp"
#include "hatnav/scene.hpp"

namespace hatnav {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
}

namespace {

void fill_cell(Image& img, int ix, int iy, int ny, int scale, Rgb c) {
  const int row0 = (ny - 1 - iy) * scale;
  for (int dy = 0; dy < scale; ++dy) {
    for (int dx = 0; dx < scale; ++dx) img.at(ix * scale + dx, row0 + dy) = c;
  }
}

void plot(Image& img, double px, double py, Rgb c) {
  const int x = static_cast<int>(std::floor(px));
  const int y = static_cast<int>(std::floor(py));
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.at(x, y) = c;
}

}  // namespace

Image render_classes(const TraversabilityGrid& grid, int scale) {
  const auto& d = grid.dims();
  Image img(d[0] * scale, d[1] * scale);
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      const auto cls = grid.at({ix, iy}).cls;
      const Rgb c = cls == CellClass::kFree ? kColorFree : cls == CellClass::kDuck ? kColorDuck : kColorBlocked;
      fill_cell(img, ix, iy, d[1], scale, c);
    }
  }
  return img;
}

void draw_trajectory(Image& img, const TraversabilityGrid& grid, const Trajectory& traj, double h_max, int scale) {
  const double px_per_m = scale / grid.resolution();
  const double top = grid.origin().y() + grid.dims()[1] * grid.resolution();
  auto to_px = [&](const Vec2& p) {
    return Vec2((p.x() - grid.origin().x()) * px_per_m, (top - p.y()) * px_per_m);
  };
  auto ducking = [&](const Waypoint& w) { return std::isfinite(w.body_height) && w.body_height < h_max - 1e-9; };
  for (std::size_t i = 0; i + 1 < traj.waypoints.size(); ++i) {
    const auto& a = traj.waypoints[i];
    const auto& b = traj.waypoints[i + 1];
    const Rgb c = ducking(a) || ducking(b) ? kColorPathDuck : kColorPathHigh;
    const Vec2 pa = to_px(a.position);
    const Vec2 pb = to_px(b.position);
    const int steps = std::max(1, static_cast<int>(std::ceil((pb - pa).norm() * 2.0)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = pa + (pb - pa) * (static_cast<double>(s) / steps);
      plot(img, p.x(), p.y(), c);
    }
  }
}

Image render_field(const NeuralField& field, const TraversabilityGrid& grid, int channel, int scale) {
  const auto& d = grid.dims();
  Image img(d[0] * scale, d[1] * scale);
  Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(grid.size()));
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) pts.col(static_cast<Eigen::Index>(grid.linear({ix, iy}))) = grid.center({ix, iy});
  }
  Eigen::Matrix2Xd probs;
  field_evaluate(field, pts, probs, nullptr);
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      const double p = std::clamp(probs(channel, static_cast<Eigen::Index>(grid.linear({ix, iy}))), 0.0, 1.0);
      const auto r = static_cast<std::uint8_t>(std::lround(255.0 * p));
      const auto b = static_cast<std::uint8_t>(255 - r);
      fill_cell(img, ix, iy, d[1], scale, {r, 0, b});
    }
  }
  return img;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size() * 3);
  for (const auto& px : img.pixels) {
    for (auto c : px) out.push_back(static_cast<char>(c));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) { write_text_file(path, encode_ppm(img)); }

}  // namespace hatnav
