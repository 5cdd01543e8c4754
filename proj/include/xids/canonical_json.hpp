#ifndef XIDS_CANONICAL_JSON_HPP
#define XIDS_CANONICAL_JSON_HPP

#include <json.hpp>

#include <string>

namespace xids {

using Json = nlohmann::json;

/// Sorted keys, two-space indent, doubles with 17 significant digits (always
/// carrying a '.' or exponent so they re-parse as floats). Non-finite numbers
/// become null. dump -> parse -> dump is a fixed point.
std::string canonical_dump(const Json& j);

/// Formats one double the way canonical_dump does.
std::string format_double(double v);

/// Removes, recursively, every object member whose key contains "seconds".
/// Wall-clock measurements use that naming, so the result is rerun-stable.
Json strip_timing(const Json& j);

}  // namespace xids

#endif  // XIDS_CANONICAL_JSON_HPP
