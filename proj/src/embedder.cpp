#include "vexel/embedder.hpp"

#include <cmath>
#include <filesystem>
#include <mutex>

#include "vexel/image_ops.hpp"
#include "vexel/io/png.hpp"

namespace vexel {

LinearMockEmbedder::LinearMockEmbedder(std::uint64_t seed, int dim, int input_size)
    : seed_(seed), dim_(dim), size_(input_size) {
  if (dim <= 0 || input_size <= 0) throw BackendError("mock embedder needs positive dim and input size");
  const std::size_t cols = 3 * std::size_t(size_) * size_;
  matrix_.resize(std::size_t(dim_) * cols);
  Rng rng(seed ^ 0x6d6f636b696d6167ull);
  const double scale = 1.0 / std::sqrt(double(cols));
  for (auto& v : matrix_) v = rng.normal() * scale;
}

void LinearMockEmbedder::register_text(const std::string& text, Embedding embedding) {
  if (int(embedding.size()) != dim_) {
    throw Error("registered embedding for \"" + text + "\" has length " + std::to_string(embedding.size()) +
                ", expected " + std::to_string(dim_));
  }
  overrides_[text] = std::move(embedding);
}

Embedding LinearMockEmbedder::embed_text(const std::string& text) const {
  if (auto it = overrides_.find(text); it != overrides_.end()) return it->second;
  Rng rng(fnv1a64(text) ^ (seed_ * 0x9e3779b97f4a7c15ull));
  Embedding v(dim_);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

Embedding LinearMockEmbedder::embed_image(const Raster& image) const {
  const Raster small = resize_to_backend(image, size_);
  const std::size_t cols = small.pixels.size();
  Embedding out(dim_, 0.0);
  for (int d = 0; d < dim_; ++d) {
    const double* row = &matrix_[std::size_t(d) * cols];
    double acc = 0.0;
    for (std::size_t i = 0; i < cols; ++i) acc += row[i] * small.pixels[i];
    out[d] = acc;
  }
  return out;
}

Raster LinearMockEmbedder::image_vjp(const Raster& image, std::span<const double> upstream) const {
  if (int(upstream.size()) != dim_) throw Error("upstream gradient length does not match the embedding dimension");
  Raster small(size_, size_);
  const std::size_t cols = small.pixels.size();
  for (int d = 0; d < dim_; ++d) {
    const double u = upstream[d];
    if (u == 0.0) continue;
    const double* row = &matrix_[std::size_t(d) * cols];
    for (std::size_t i = 0; i < cols; ++i) small.pixels[i] += u * row[i];
  }
  if (image.width == size_ && image.height == size_) return small;
  return Resize(image.width, image.height, size_, size_).adjoint(small);
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackendFactory>& registry() {
  static std::map<std::string, BackendFactory> r;
  return r;
}

}  // namespace

void register_backend_factory(const std::string& kind, BackendFactory factory) {
  std::lock_guard lock(registry_mutex());
  if (factory) {
    registry()[kind] = std::move(factory);
  } else {
    registry().erase(kind);
  }
}

std::shared_ptr<EmbedderBackend> make_backend(const BackendConfig& config) {
  if (config.kind == "mock") {
    try {
      auto mock = std::make_shared<LinearMockEmbedder>(config.seed, config.dim, config.input_size);
      for (const auto& [text, vec] : config.text_overrides) mock->register_text(text, vec);
      for (const auto& [text, path] : config.text_from_image) mock->register_text(text, mock->embed_image(read_png(path)));
      return mock;
    } catch (const BackendError&) {
      throw;
    } catch (const Error& e) {
      throw BackendError(std::string("mock backend setup failed: ") + e.what());
    }
  }

  BackendFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    if (auto it = registry().find(config.kind); it != registry().end()) factory = it->second;
  }
  if (!factory) {
    if (config.kind == "external") {
      throw BackendError(
          "external backend is not available in this build; load it through the Python package "
          "(vexel.backends) or register a factory for \"external\"");
    }
    throw BackendError("unknown backend kind \"" + config.kind + "\"");
  }
  if (config.kind == "external") {
    for (const auto* path : {&config.text_model, &config.image_model}) {
      if (path->empty()) throw BackendError("external backend needs backend.text_model and backend.image_model");
      if (!std::filesystem::exists(*path)) throw BackendError("model file not found: " + *path);
    }
  }
  try {
    auto backend = factory(config);
    if (!backend) throw BackendError("backend factory for \"" + config.kind + "\" returned nothing");
    return backend;
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("backend \"" + config.kind + "\" failed to load: " + e.what());
  }
}

}  // namespace vexel
