#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "vexel/common.hpp"
#include "vexel/embedder.hpp"
#include "vexel/optimizer.hpp"
#include "vexel/vectorizer.hpp"

namespace vexel {

/// Everything a run needs, as read from a JSON config file. Omitted keys
/// take the library defaults; unknown keys are errors.
struct RunConfig {
  std::string input;   // image path, may be empty when given on the command line
  std::string output;  // document path, likewise
  VectorizeConfig vectorize = VectorizeConfig::defaults();
  /// Carries the guidance settings in optimizer.guidance.
  OptimizeConfig optimizer;
  /// Edit only the elements whose control-point boxes meet this rectangle.
  std::optional<Rect> subregion;
  BackendConfig backend;
};

/// Parses JSON config text. Relative paths are kept as written.
RunConfig parse_config(std::string_view text);

/// Reads a config file; relative paths inside it (input, output, mock
/// text_from_image images) are resolved against the file's directory.
RunConfig load_config(const std::string& path);

/// Fully populated JSON for a config (every default written out).
std::string dump_config(const RunConfig& config);

}  // namespace vexel
