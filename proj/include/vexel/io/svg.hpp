#pragma once

#include <string>
#include <string_view>

#include "vexel/document.hpp"

namespace vexel {

/// Serializes to the SVG subset: one <g> per round carrying
/// data-round-index, data-round-ncolors and optionally data-round-region,
/// and one <path id="eN"> per element with absolute M/C/Z data at six
/// decimals, fill="#rrggbb" and fill-opacity.
std::string serialize_svg(const VectorDocument& doc);

/// Parses the subset written by serialize_svg. Anything else (other
/// elements or attributes, relative or non-cubic path commands, open paths)
/// is rejected with an Error giving the byte offset.
VectorDocument parse_svg(std::string_view text);

VectorDocument read_svg(const std::string& path);
void write_svg(const std::string& path, const VectorDocument& doc);

}  // namespace vexel
