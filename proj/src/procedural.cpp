#include "latentswipe/errors.hpp"
#include "latentswipe/genkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace latentswipe {

namespace {

// Standard deviation of the warp by variance rank. Face coordinates take the
// even ranks and the first nuisance coordinates the odd ranks, so principal
// subspaces of any size mix visible and invisible directions.
constexpr double kWarpScale = 2.0;
constexpr double kWarpDecay = 0.92;
constexpr double kWarpCoupling = 0.1;
constexpr std::uint64_t kWarpSeed = 0x5fa3e1d2c0ffee01ULL;

std::size_t variance_rank(std::size_t j) {
  const std::size_t k = kFaceParameters;
  if (j < k) return 2 * j;
  if (j < 2 * k) return 2 * (j - k) + 1;
  return j;
}

struct Rgb {
  double r, g, b;
};

Rgb lerp(Rgb a, Rgb b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

double unit(double u) { return 0.5 * (u + 1.0); }

// Float canvas with signed-distance antialiasing. All shapes are clipped to
// an optional rectangle so callers can bound the pixels a feature touches.
class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w) : h_(h), w_(w), px_(h * w) {}

  void fill_vertical_gradient(Rgb top, Rgb bottom) {
    for (std::size_t r = 0; r < h_; ++r) {
      const Rgb c = lerp(top, bottom, static_cast<double>(r) / static_cast<double>(h_ - 1));
      for (std::size_t col = 0; col < w_; ++col) px_[r * w_ + col] = c;
    }
  }

  void clip(PixelRect rect) { clip_ = rect; }
  void unclip() { clip_ = {0, 0, h_, w_}; }

  template <typename Sdf>
  void shade(double x0, double y0, double x1, double y1, Rgb color, double alpha, Sdf&& sdf) {
    if (alpha <= 0.0) return;
    const auto c0 = static_cast<std::size_t>(std::clamp(std::floor(x0 - 1.0), 0.0, static_cast<double>(w_)));
    const auto c1 = static_cast<std::size_t>(std::clamp(std::ceil(x1 + 1.0), 0.0, static_cast<double>(w_)));
    const auto r0 = static_cast<std::size_t>(std::clamp(std::floor(y0 - 1.0), 0.0, static_cast<double>(h_)));
    const auto r1 = static_cast<std::size_t>(std::clamp(std::ceil(y1 + 1.0), 0.0, static_cast<double>(h_)));
    for (std::size_t r = std::max(r0, clip_.row0); r < std::min(r1, clip_.row1); ++r) {
      for (std::size_t c = std::max(c0, clip_.col0); c < std::min(c1, clip_.col1); ++c) {
        const double d = sdf(static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5);
        const double cover = std::clamp(0.5 - d, 0.0, 1.0) * alpha;
        if (cover <= 0.0) continue;
        Rgb& p = px_[r * w_ + c];
        p = lerp(p, color, cover);
      }
    }
  }

  void ellipse(double cx, double cy, double rx, double ry, Rgb color, double alpha = 1.0) {
    shade(cx - rx, cy - ry, cx + rx, cy + ry, color, alpha, [=](double x, double y) {
      const double nx = (x - cx) / rx, ny = (y - cy) / ry;
      return (std::sqrt(nx * nx + ny * ny) - 1.0) * std::min(rx, ry);
    });
  }

  void ring(double cx, double cy, double radius, double thickness, Rgb color, double alpha = 1.0) {
    const double outer = radius + thickness * 0.5;
    shade(cx - outer, cy - outer, cx + outer, cy + outer, color, alpha, [=](double x, double y) {
      return std::abs(std::hypot(x - cx, y - cy) - radius) - thickness * 0.5;
    });
  }

  void line(double xa, double ya, double xb, double yb, double thickness, Rgb color, double alpha = 1.0) {
    const double half = thickness * 0.5;
    shade(std::min(xa, xb) - half, std::min(ya, yb) - half, std::max(xa, xb) + half, std::max(ya, yb) + half, color,
          alpha, [=](double x, double y) {
            const double dx = xb - xa, dy = yb - ya;
            const double len2 = dx * dx + dy * dy;
            double t = len2 > 0.0 ? ((x - xa) * dx + (y - ya) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            return std::hypot(x - (xa + t * dx), y - (ya + t * dy)) - half;
          });
  }

  // Quadratic Bezier as a polyline of capsules.
  void curve(double xa, double ya, double xc, double yc, double xb, double yb, double thickness, Rgb color) {
    constexpr int kSegments = 16;
    double px = xa, py = ya;
    for (int i = 1; i <= kSegments; ++i) {
      const double t = static_cast<double>(i) / kSegments;
      const double u = 1.0 - t;
      const double x = u * u * xa + 2 * u * t * xc + t * t * xb;
      const double y = u * u * ya + 2 * u * t * yc + t * t * yb;
      line(px, py, x, y, thickness, color);
      px = x;
      py = y;
    }
  }

  ImageBuffer to_image() const {
    ImageBuffer img(h_, w_);
    for (std::size_t i = 0; i < px_.size(); ++i) {
      img.pixels[3 * i + 0] = static_cast<std::uint8_t>(std::lround(std::clamp(px_[i].r, 0.0, 255.0)));
      img.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::lround(std::clamp(px_[i].g, 0.0, 255.0)));
      img.pixels[3 * i + 2] = static_cast<std::uint8_t>(std::lround(std::clamp(px_[i].b, 0.0, 255.0)));
    }
    return img;
  }

 private:
  std::size_t h_, w_;
  std::vector<Rgb> px_;
  PixelRect clip_{0, 0, h_, w_};
};

// Face geometry in pixels, derived from normalised parameters.
struct FaceLayout {
  double cx, cy, face_rx, face_ry;
  double eye_y, eye_dx, eye_r;
  double glasses_r, glasses_t;
};

FaceLayout layout(const std::array<double, kFaceParameters>& u, double size) {
  FaceLayout f{};
  f.cx = size * 0.5;
  f.cy = size * 0.54;
  f.face_rx = size * (0.27 + 0.05 * u[kFaceAspect]);
  f.face_ry = size * (0.35 - 0.03 * u[kFaceAspect]);
  f.eye_y = f.cy - f.face_ry * 0.18;
  f.eye_dx = size * (0.105 + 0.03 * u[kEyeSpacing]);
  f.eye_r = size * (0.033 + 0.011 * u[kEyeSize]);
  f.glasses_r = f.eye_r * 1.7;
  f.glasses_t = std::max(1.5, size * 0.012);
  return f;
}

std::array<double, kFaceParameters> padded(const Vector& params) {
  std::array<double, kFaceParameters> u{};
  for (Eigen::Index i = 0; i < params.size() && i < static_cast<Eigen::Index>(kFaceParameters); ++i)
    u[static_cast<std::size_t>(i)] = params[i];
  return u;
}

}  // namespace

std::string_view to_string(GeneratorKind kind) {
  return kind == GeneratorKind::procedural ? "procedural" : "external";
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine_similarity: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

ProceduralGenerator::ProceduralGenerator(std::size_t latent_dim, std::size_t image_size)
    : d_(latent_dim), size_(image_size) {
  if (d_ < 1) throw Error("procedural generator needs latent_dim >= 1");
  if (size_ < 32) throw Error("procedural generator needs image_size >= 32");
  const auto d = static_cast<Eigen::Index>(d_);
  std::mt19937_64 rng(kWarpSeed);
  std::normal_distribution<double> normal;
  Matrix coupling(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) coupling(i, j) = normal(rng);
  coupling *= kWarpCoupling / std::sqrt(static_cast<double>(d));
  Vector scale(d);
  for (Eigen::Index j = 0; j < d; ++j)
    scale[j] = kWarpScale * std::pow(kWarpDecay, static_cast<double>(variance_rank(static_cast<std::size_t>(j))));
  warp_ = scale.asDiagonal() * (Matrix::Identity(d, d) + coupling);
  offset_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) offset_[j] = 0.2 * std::sin(1.3 * static_cast<double>(j) + 0.4);
}

GeneratorDescriptor ProceduralGenerator::descriptor() const {
  return {d_, size_, size_, GeneratorKind::procedural};
}

std::vector<LatentSample> ProceduralGenerator::sample_latents(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw Error("sample_latents needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<LatentSample> out;
  out.reserve(n);
  Vector z(static_cast<Eigen::Index>(d_));
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
    out.push_back(warp_ * z + offset_);
  }
  return out;
}

void ProceduralGenerator::check(const LatentSample& w) const {
  if (static_cast<std::size_t>(w.size()) != d_)
    throw DimensionMismatch("latent length " + std::to_string(w.size()) + " != " + std::to_string(d_));
  if (!w.allFinite()) throw DimensionMismatch("latent contains non-finite entries");
}

Vector ProceduralGenerator::face_parameters(const LatentSample& w) const {
  check(w);
  const auto k = static_cast<Eigen::Index>(std::min(d_, kFaceParameters));
  Vector u(k);
  for (Eigen::Index i = 0; i < k; ++i) u[i] = std::tanh(w[i] / kSquashScale);
  return u;
}

Vector ProceduralGenerator::embed(const LatentSample& w) const { return face_parameters(w); }

Vector ProceduralGenerator::embed_image(const ImageBuffer&) const {
  throw Error("procedural generator cannot embed raw images; embed the latent instead");
}

PixelRect ProceduralGenerator::eye_region(const Vector& face_params) const {
  const FaceLayout f = layout(padded(face_params), static_cast<double>(size_));
  const double reach = f.glasses_r + f.glasses_t + 2.0;
  auto px = [this](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(size_)));
  };
  return {px(std::floor(f.eye_y - reach)), px(std::floor(f.cx - f.eye_dx - reach)),
          px(std::ceil(f.eye_y + reach)), px(std::ceil(f.cx + f.eye_dx + reach))};
}

ImageBuffer ProceduralGenerator::render(const LatentSample& w) const {
  const auto u = padded(face_parameters(w));
  const double s = static_cast<double>(size_);
  const FaceLayout f = layout(u, s);
  Canvas canvas(size_, size_);
  canvas.fill_vertical_gradient({214, 228, 240}, {168, 188, 210});

  const Rgb skin = lerp({246, 214, 188}, {112, 74, 52}, unit(u[kSkinTone]));
  const Rgb hair = lerp({38, 26, 20}, {226, 196, 120}, unit(u[kHairTone]));
  const Rgb dark{40, 30, 28};

  // Hair behind the head; length extends it down the sides.
  const double hair_len = s * (0.05 + 0.22 * unit(u[kHairLength]));
  canvas.ellipse(f.cx, f.cy - f.face_ry * 0.15 + hair_len * 0.5, f.face_rx * 1.12,
                 f.face_ry * 0.92 + hair_len * 0.5, hair);
  canvas.ellipse(f.cx, f.cy, f.face_rx, f.face_ry, skin);
  // Fringe.
  canvas.ellipse(f.cx, f.cy - f.face_ry * 0.78, f.face_rx * 0.98, f.face_ry * 0.34, hair);

  // Forehead wrinkles.
  const double wrinkle_alpha = 0.6 * unit(u[kWrinkles]);
  const int wrinkle_count = 1 + static_cast<int>(std::floor(3.0 * unit(u[kWrinkles])));
  for (int i = 0; i < wrinkle_count; ++i) {
    const double y = f.eye_y - f.face_ry * (0.26 + 0.07 * i);
    canvas.line(f.cx - f.face_rx * 0.35, y, f.cx + f.face_rx * 0.35, y, std::max(1.0, s * 0.005),
                lerp(skin, dark, 0.5), wrinkle_alpha);
  }

  for (int side : {-1, 1}) {
    const double ex = f.cx + side * f.eye_dx;
    canvas.ellipse(ex, f.eye_y, f.eye_r * 1.35, f.eye_r, {250, 250, 250});
    canvas.ellipse(ex, f.eye_y, f.eye_r * 0.62, f.eye_r * 0.62, {70, 110, 140});
    canvas.ellipse(ex, f.eye_y, f.eye_r * 0.3, f.eye_r * 0.3, {15, 15, 15});
    // Brows tilt symmetrically about the face axis.
    const double angle = 0.35 * u[kBrowAngle];
    const double half = f.eye_r * 1.5;
    const double by = f.eye_y - f.glasses_r - f.glasses_t - s * 0.02;
    const double dy = side * std::sin(angle) * half;
    canvas.line(ex - std::cos(angle) * half, by + dy, ex + std::cos(angle) * half, by - dy,
                std::max(2.0, s * 0.014), hair);
  }

  const double nose_len = s * (0.085 + 0.04 * u[kNoseLength]);
  const double nose_top = f.eye_y + f.eye_r;
  canvas.line(f.cx, nose_top, f.cx + s * 0.012, nose_top + nose_len, std::max(1.5, s * 0.008), lerp(skin, dark, 0.45));
  canvas.line(f.cx + s * 0.012, nose_top + nose_len, f.cx - s * 0.015, nose_top + nose_len, std::max(1.5, s * 0.008),
              lerp(skin, dark, 0.45));

  const double mouth_y = nose_top + nose_len + (f.cy + f.face_ry - nose_top - nose_len) * 0.38;
  const double mouth_half = s * (0.085 + 0.035 * u[kMouthWidth]);
  const double bend = s * 0.05 * u[kMouthCurve];
  canvas.curve(f.cx - mouth_half, mouth_y, f.cx, mouth_y + bend, f.cx + mouth_half, mouth_y, std::max(2.0, s * 0.012),
               {150, 50, 60});

  // Glasses appear once their coordinate passes zero and stay within the
  // eye region.
  const double glasses = std::max(0.0, u[kGlasses]);
  if (glasses > 0.0) {
    canvas.clip(eye_region(Vector::Map(u.data(), static_cast<Eigen::Index>(std::min(d_, kFaceParameters)))));
    for (int side : {-1, 1})
      canvas.ring(f.cx + side * f.eye_dx, f.eye_y, f.glasses_r, f.glasses_t, {20, 20, 24}, glasses);
    canvas.line(f.cx - f.eye_dx + f.glasses_r, f.eye_y, f.cx + f.eye_dx - f.glasses_r, f.eye_y, f.glasses_t,
                {20, 20, 24}, glasses);
    canvas.unclip();
  }
  return canvas.to_image();
}

}  // namespace latentswipe
