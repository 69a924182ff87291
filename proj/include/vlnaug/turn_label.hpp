#pragma once

#include <optional>
#include <string_view>

namespace vlnaug {

/// STOP is only produced by downstream consumers (terminal sentence, NAP
/// targets, graph-derived actions), never by the frame predictor.
enum class TurnLabel { kForward, kLeft, kRight, kStop };

constexpr std::string_view to_string(TurnLabel label) noexcept {
    switch (label) {
        case TurnLabel::kForward: return "FORWARD";
        case TurnLabel::kLeft: return "LEFT";
        case TurnLabel::kRight: return "RIGHT";
        case TurnLabel::kStop: return "STOP";
    }
    return "?";
}

constexpr std::optional<TurnLabel> parse_turn_label(std::string_view text) noexcept {
    if (text == "FORWARD") return TurnLabel::kForward;
    if (text == "LEFT") return TurnLabel::kLeft;
    if (text == "RIGHT") return TurnLabel::kRight;
    if (text == "STOP") return TurnLabel::kStop;
    return std::nullopt;
}

}  // namespace vlnaug
