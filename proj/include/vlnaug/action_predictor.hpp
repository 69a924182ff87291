#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "vlnaug/frame.hpp"
#include "vlnaug/mse_kernels.hpp"
#include "vlnaug/turn_label.hpp"

namespace vlnaug {

/// Angular parameters of the rotation-similarity predictor. Pixel sizes are
/// derived per frame width: shift R = round(shift/fov * W), window
/// D = round(window/fov * W).
struct RotationConfig {
    double window_deg = 80.0;
    double shift_deg = 60.0;
    double frame_fov_deg = 360.0;
    double tie_epsilon = 1e-9;
    /// Frames wider than this are area-downscaled before comparison; 0 disables.
    int downscale_width = 0;

    /// Checks the angular invariants; throws Error(kInvalidArgument).
    void validate() const;
};

struct PixelGeometry {
    int shift_px = 0;
    int window_px = 0;
};

/// Throws Error(kDegenerateGeometry) unless 1 <= D <= W - R.
PixelGeometry resolve_geometry(const RotationConfig& cfg, int frame_width);

/// Direction in which image content is translated.
enum class ContentShift { kLeft, kRight };

struct RotatedFrame {
    FrameImage frame;
    ValidRegion valid;
};

/// Translates columns by shift_px without wraparound. Shifting content right
/// gives out[x] = in[x - s] and invalidates the leftmost s columns; shifting
/// left gives out[x] = in[x + s] and invalidates the rightmost s columns.
/// Invalid columns are zero-filled. Throws Error(kInvalidArgument) unless
/// 0 <= shift_px < W.
RotatedFrame rotate_frame(const FrameImage& frame, ContentShift direction, int shift_px);

/// One MSE score per window across the valid region; lower is more similar.
/// Throws Error(kInvalidArgument) on shape mismatch and
/// Error(kDegenerateGeometry) when no window fits.
std::vector<double> windowed_mse(const FrameImage& reference, const FrameImage& candidate,
                                 ValidRegion valid, int window_px);

/// Same, with the window width taken from cfg for this frame width.
std::vector<double> windowed_mse(const FrameImage& reference, const FrameImage& candidate,
                                 ValidRegion valid, const RotationConfig& cfg);

enum class Candidate { kLeftRotated, kUnchanged, kRightRotated };

std::string_view to_string(Candidate candidate) noexcept;

struct WindowScores {
    Candidate candidate = Candidate::kUnchanged;
    ValidRegion valid;
    std::vector<double> scores;
    std::size_t selected_window = 0;

    [[nodiscard]] double selected_score() const { return scores.at(selected_window); }
};

struct ActionPrediction {
    TurnLabel label = TurnLabel::kForward;
    /// Indexed by Candidate.
    std::array<WindowScores, 3> candidates;
    /// Fewer than three windows, so leftmost/middle/rightmost overlap.
    bool windows_coincide = false;
};

/// Compares frame_t against frame_t1 shifted left (undoing a left turn),
/// unshifted, and shifted right (undoing a right turn). The left candidate is
/// scored at its rightmost window, the unchanged one at its middle window
/// (floor(n/2)) and the right candidate at its leftmost window; the lowest MSE
/// wins, ties within tie_epsilon go FORWARD, then LEFT, then RIGHT.
///
/// The unchanged candidate is compared over the centred band of width W - R so
/// that all three candidates produce the same number of windows.
ActionPrediction predict_action(const FrameImage& frame_t, const FrameImage& frame_t1,
                                const RotationConfig& cfg);

/// predict_action over each consecutive pair, pairs evaluated in parallel.
/// Throws Error(kInvalidArgument) for fewer than two frames or mixed shapes.
std::vector<ActionPrediction> predict_sequence(std::span<const FrameImage> frames,
                                               const RotationConfig& cfg);

/// Serial reference for predict_sequence.
std::vector<ActionPrediction> predict_sequence_serial(std::span<const FrameImage> frames,
                                                      const RotationConfig& cfg);

std::vector<TurnLabel> labels_of(std::span<const ActionPrediction> predictions);

}  // namespace vlnaug
