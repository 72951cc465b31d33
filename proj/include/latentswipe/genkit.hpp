#pragma once

#include "latentswipe/image.hpp"
#include "latentswipe/types.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace latentswipe {

enum class GeneratorKind { procedural, external };

std::string_view to_string(GeneratorKind kind);

struct GeneratorDescriptor {
  std::size_t latent_dim = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  GeneratorKind kind = GeneratorKind::procedural;

  bool operator==(const GeneratorDescriptor&) const = default;
};

// Image generator s: W -> X plus the embedding used by similarity oracles.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual GeneratorDescriptor descriptor() const = 0;
  // n latents drawn from the generator's latent distribution.
  virtual std::vector<LatentSample> sample_latents(std::size_t n, std::uint64_t seed) const = 0;
  virtual ImageBuffer render(const LatentSample& w) const = 0;
  virtual std::vector<std::uint8_t> render_png(const LatentSample& w) const { return encode_png(render(w)); }
  virtual Vector embed(const LatentSample& w) const = 0;
  virtual Vector embed_image(const ImageBuffer& image) const = 0;
};

// Number of latent coordinates that drive visible face features.
inline constexpr std::size_t kFaceParameters = 12;
// u_k = tanh(w_k / kSquashScale); the largest slope of the map is
// 1 / kSquashScale, which bounds how fast face parameters move with w.
inline constexpr double kSquashScale = 1.5;
inline constexpr double kFaceParameterLipschitz = 1.0 / kSquashScale;

// Normalised face parameters in (-1, 1), in this order.
enum FaceParam : std::size_t {
  kFaceAspect = 0,
  kSkinTone,
  kEyeSpacing,
  kEyeSize,
  kBrowAngle,
  kNoseLength,
  kMouthWidth,
  kMouthCurve,
  kHairLength,
  kHairTone,
  kGlasses,
  kWrinkles,
};

struct PixelRect {
  std::size_t row0 = 0, col0 = 0, row1 = 0, col1 = 0;  // half-open

  bool contains(std::size_t r, std::size_t c) const { return r >= row0 && r < row1 && c >= col0 && c < col1; }
};

// Deterministic vector-drawn face. Latents follow w = A z + b with z
// standard normal and A a fixed full-rank warp; only the first
// kFaceParameters coordinates affect the picture, the rest are nuisance
// directions.
class ProceduralGenerator final : public Generator {
 public:
  explicit ProceduralGenerator(std::size_t latent_dim = 64, std::size_t image_size = 256);

  GeneratorDescriptor descriptor() const override;
  std::vector<LatentSample> sample_latents(std::size_t n, std::uint64_t seed) const override;
  ImageBuffer render(const LatentSample& w) const override;
  Vector embed(const LatentSample& w) const override;
  // Procedural faces cannot be recovered from pixels.
  Vector embed_image(const ImageBuffer& image) const override;

  // tanh-squashed first min(d, 12) coordinates.
  Vector face_parameters(const LatentSample& w) const;
  // Region that holds every glasses pixel for the given parameters.
  PixelRect eye_region(const Vector& face_params) const;

  const Matrix& warp() const { return warp_; }
  const Vector& warp_offset() const { return offset_; }

 private:
  void check(const LatentSample& w) const;

  std::size_t d_;
  std::size_t size_;
  Matrix warp_;
  Vector offset_;
};

struct ExternalOptions {
  std::chrono::milliseconds timeout{10000};
  int max_in_flight = 4;
};

// Client for a remote generator speaking the /v1 JSON protocol:
//   GET  /v1/descriptor          -> {d, height, width}
//   POST /v1/render   {latent}   -> image/png
//   POST /v1/embed    {latent} | {png_base64} -> {embedding}
//   POST /v1/sample   {n, seed}  -> {latents}
class ExternalGenerator final : public Generator {
 public:
  explicit ExternalGenerator(std::string base_url, ExternalOptions options = {});
  ~ExternalGenerator() override;

  GeneratorDescriptor descriptor() const override;
  std::vector<LatentSample> sample_latents(std::size_t n, std::uint64_t seed) const override;
  ImageBuffer render(const LatentSample& w) const override;
  std::vector<std::uint8_t> render_png(const LatentSample& w) const override;
  Vector embed(const LatentSample& w) const override;
  Vector embed_image(const ImageBuffer& image) const override;

 private:
  std::string get(const std::string& path) const;
  std::string post(const std::string& path, const std::string& body) const;

  std::string base_url_;
  ExternalOptions options_;
  mutable std::counting_semaphore<64> in_flight_;
};

double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace latentswipe
