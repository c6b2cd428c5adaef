#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace vexel {

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure of an embedding backend (loading, evaluation, missing support).
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Axis-aligned rectangle in canvas units. Integer-valued for pixel regions,
/// but stored as doubles so it can also describe control-point bounds.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const { return x + width; }
  double bottom() const { return y + height; }
  bool has_area() const { return width > 0.0 && height > 0.0; }
  bool operator==(const Rect&) const = default;
};

/// Integer pixel rectangle; used for crops, ROIs and patches.
struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int right() const { return x + width; }
  int bottom() const { return y + height; }
  bool operator==(const PixelRect&) const = default;
};

inline Rect to_rect(const PixelRect& r) {
  return {double(r.x), double(r.y), double(r.width), double(r.height)};
}

/// Deterministic random source: std::mt19937_64 with hand-written
/// distributions, so streams are identical across standard library
/// implementations (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed);
  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& text, std::uint64_t basis = 1469598103934665603ull);

/// Worker count used by the parallel kernels. Results never depend on it.
void set_thread_count(int threads);
int thread_count();

/// Runs task(i) for i in [0, count) on up to thread_count() workers.
/// Tasks must write to disjoint outputs.
void parallel_for(int count, const std::function<void(int)>& task);

}  // namespace vexel
