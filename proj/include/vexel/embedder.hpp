#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vexel/raster.hpp"

namespace vexel {

using Embedding = std::vector<double>;

/// Text and image encoders sharing one embedding space.
///
/// embed_image accepts any raster size; guidance always passes images already
/// resized to input_size() x input_size(). image_vjp returns the gradient of
/// dot(upstream, embed_image(image)) with respect to the pixels of `image`.
/// Implementations must be safe to call concurrently through const methods.
class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;

  virtual Embedding embed_text(const std::string& text) const = 0;
  virtual Embedding embed_image(const Raster& image) const = 0;
  virtual Raster image_vjp(const Raster& image, std::span<const double> upstream) const = 0;
  virtual int input_size() const = 0;
  virtual int dim() const = 0;
};

/// Deterministic linear stand-in for a real encoder pair.
///
/// Images are resized to S x S, flattened to 3*S*S values and multiplied by a
/// fixed seeded Gaussian matrix (entries N(0, 1 / (3*S*S))); no normalization
/// follows, so image_vjp is exactly the transpose chain. Texts map to seeded
/// pseudo-random unit vectors unless an explicit vector has been registered.
class LinearMockEmbedder : public EmbedderBackend {
 public:
  explicit LinearMockEmbedder(std::uint64_t seed = 0, int dim = 64, int input_size = 32);

  /// Overrides embed_text(text). Throws Error when the length is not dim().
  void register_text(const std::string& text, Embedding embedding);

  Embedding embed_text(const std::string& text) const override;
  Embedding embed_image(const Raster& image) const override;
  Raster image_vjp(const Raster& image, std::span<const double> upstream) const override;
  int input_size() const override { return size_; }
  int dim() const override { return dim_; }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  int dim_;
  int size_;
  std::vector<double> matrix_;  // dim x (3 * size * size), row-major
  std::map<std::string, Embedding> overrides_;
};

/// Backend selection as it appears in run configuration files.
struct BackendConfig {
  std::string kind = "mock";  // "mock" or "external"
  std::uint64_t seed = 0;
  int dim = 64;
  int input_size = 32;
  std::string text_model;   // external only
  std::string image_model;  // external only
  /// Mock only: prompt -> explicit embedding.
  std::map<std::string, Embedding> text_overrides;
  /// Mock only: prompt -> PNG path whose image embedding becomes the prompt's.
  std::map<std::string, std::string> text_from_image;
  bool operator==(const BackendConfig&) const = default;
};

using BackendFactory = std::function<std::shared_ptr<EmbedderBackend>(const BackendConfig&)>;

/// Installs a constructor for `kind` (e.g. an external-model adapter
/// provided by the Python package or a plugin). An empty factory removes
/// the kind again.
void register_backend_factory(const std::string& kind, BackendFactory factory);

/// Builds the configured backend. Every failure (unknown kind, missing
/// model files, unavailable runtime) is reported as BackendError.
std::shared_ptr<EmbedderBackend> make_backend(const BackendConfig& config);

}  // namespace vexel
