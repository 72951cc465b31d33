#include "latentswipe/image.hpp"
#include "latentswipe/simlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace latentswipe {

namespace {

constexpr std::size_t kPlotW = 480;
constexpr std::size_t kPlotH = 320;
constexpr std::size_t kMargin = 30;

using Color = std::array<std::uint8_t, 3>;

Color strategy_color(Strategy s) {
  switch (s) {
    case Strategy::bandit_bo:
      return {214, 39, 40};
    case Strategy::simple_bo:
      return {31, 119, 180};
    case Strategy::random:
      return {127, 127, 127};
  }
  return {0, 0, 0};
}

void put(ImageBuffer& img, long r, long c, Color col) {
  if (r < 0 || c < 0 || r >= static_cast<long>(img.height) || c >= static_cast<long>(img.width)) return;
  auto* p = img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  p[0] = col[0];
  p[1] = col[1];
  p[2] = col[2];
}

// Bresenham, two pixels wide.
void segment(ImageBuffer& img, long x0, long y0, long x1, long y1, Color col) {
  const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    put(img, y0, x0, col);
    put(img, y0 + 1, x0, col);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

ImageBuffer plot(const std::vector<const SummaryRow*>& rows) {
  ImageBuffer img(kPlotH, kPlotW);
  std::fill(img.pixels.begin(), img.pixels.end(), 255);
  double lo = 1.0, hi = -1.0;
  std::size_t len = 1;
  for (const auto* row : rows) {
    for (double v : row->mean_curve) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    len = std::max(len, row->mean_curve.size());
  }
  if (hi < lo) {
    lo = -1.0;
    hi = 1.0;
  }
  const double pad = std::max(0.02, 0.05 * (hi - lo));
  lo -= pad;
  hi += pad;
  const double x_span = static_cast<double>(kPlotW - 2 * kMargin);
  const double y_span = static_cast<double>(kPlotH - 2 * kMargin);
  auto px = [&](std::size_t i) {
    return static_cast<long>(kMargin + (len > 1 ? x_span * static_cast<double>(i) / static_cast<double>(len - 1) : 0.0));
  };
  auto py = [&](double v) { return static_cast<long>(kMargin + y_span * (hi - v) / (hi - lo)); };

  const Color grid{225, 225, 225}, axis{0, 0, 0};
  for (std::size_t i = 0; i < len; i += 10) segment(img, px(i), kMargin, px(i), kPlotH - kMargin, grid);
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    segment(img, kMargin, py(v), kPlotW - kMargin, py(v), grid);
  }
  segment(img, kMargin, kPlotH - kMargin, kPlotW - kMargin, kPlotH - kMargin, axis);
  segment(img, kMargin, kMargin, kMargin, kPlotH - kMargin, axis);
  for (const auto* row : rows) {
    const Color col = strategy_color(row->strategy);
    for (std::size_t i = 1; i < row->mean_curve.size(); ++i)
      segment(img, px(i - 1), py(row->mean_curve[i - 1]), px(i), py(row->mean_curve[i]), col);
  }
  return img;
}

void save(const std::filesystem::path& path, const ImageBuffer& img) {
  const auto png = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
}

}  // namespace

void write_plots(const std::filesystem::path& dir, std::span<const SummaryRow> rows) {
  std::filesystem::create_directories(dir / "plots");
  std::map<std::size_t, std::vector<const SummaryRow*>> by_dim;
  for (const auto& row : rows) {
    save(dir / "plots" / (std::string(to_string(row.strategy)) + "_d" + std::to_string(row.d_prime) + ".png"),
         plot({&row}));
    by_dim[row.d_prime].push_back(&row);
  }
  // One overlay per d' with every strategy in its own colour.
  for (const auto& [dp, group] : by_dim) save(dir / "plots" / ("all_d" + std::to_string(dp) + ".png"), plot(group));
}

}  // namespace latentswipe
