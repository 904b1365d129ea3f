#include "common/duration.hpp"

#include <array>
#include <charconv>
#include <string>
#include <utility>

#include "common/error.hpp"

namespace dnim {

std::int64_t parse_duration(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, std::int64_t>, 6> units{{
        {"mo", 30 * 24 * 3600},
        {"min", 60},
        {"w", 7 * 24 * 3600},
        {"d", 24 * 3600},
        {"h", 3600},
        {"s", 1},
    }};
    std::int64_t multiplier = 1;
    std::string_view digits = text;
    for (const auto& [suffix, seconds] : units) {
        if (text.size() > suffix.size() && text.substr(text.size() - suffix.size()) == suffix) {
            digits = text.substr(0, text.size() - suffix.size());
            multiplier = seconds;
            break;
        }
    }
    std::int64_t count = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || count <= 0)
        throw UsageError("invalid duration '" + std::string(text) + "'");
    return count * multiplier;
}

}  // namespace dnim
