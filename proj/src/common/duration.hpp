#pragma once

#include <cstdint>
#include <string_view>

namespace dnim {

// Seconds from "86400", "30d", "12h", "45min", "2w" or "1mo" (one month = 30
// days). Throws UsageError on anything else or a non-positive result.
std::int64_t parse_duration(std::string_view text);

}  // namespace dnim
