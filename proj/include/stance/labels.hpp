#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace stance {

// Class indices follow the column order of the reports (C, D, Q, S); the
// same order breaks argmax ties, most frequent class first.
enum class StanceLabel : int { Comment = 0, Deny = 1, Query = 2, Support = 3 };

inline constexpr std::size_t kNumClasses = 4;

inline constexpr std::array<StanceLabel, kNumClasses> kAllLabels = {
    StanceLabel::Comment, StanceLabel::Deny, StanceLabel::Query, StanceLabel::Support};

constexpr std::size_t index_of(StanceLabel label) { return static_cast<std::size_t>(label); }
constexpr StanceLabel label_at(std::size_t index) { return static_cast<StanceLabel>(index); }

std::string_view to_string(StanceLabel label);
// Single-letter column header: C, D, Q or S.
char short_name(StanceLabel label);
std::optional<StanceLabel> parse_label(std::string_view text);

}  // namespace stance
