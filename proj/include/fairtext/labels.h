#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace fairtext {

inline constexpr std::size_t kNumLabels = 6;

// Column order of the published toxic-comment CSV files.
inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "toxic", "severe_toxic", "obscene", "threat", "insult", "identity_hate"};

using LabelVector = std::array<int, kNumLabels>;

}  // namespace fairtext
