#pragma once

#include <vector>

#include "vlnaug/frame.hpp"

namespace vlnaug {

/// Half-open column interval [begin, end) of a frame that holds real content.
struct ValidRegion {
    int begin = 0;
    int end = 0;

    [[nodiscard]] int width() const noexcept { return end - begin; }
    friend bool operator==(const ValidRegion&, const ValidRegion&) = default;
};

/// Placement of the comparison windows inside a valid region. Windows have
/// width window_px and stride window_px; the grid of count = floor(width / D)
/// windows is centred in the region so that mirrored inputs see mirrored
/// windows. first_column is the left edge of window 0.
struct WindowLayout {
    int first_column = 0;
    int window_px = 0;
    int count = 0;
};

/// Throws Error(kDegenerateGeometry) when no full window fits.
WindowLayout layout_windows(ValidRegion valid, int window_px);

namespace kernels {

// Both kernels return one mean-squared-error score per window, averaged over
// rows, window columns and channels. Preconditions (same shape, region inside
// the frame, at least one window) are checked by the caller.

/// Straight triple loop, one accumulator per window. Kept as the reference.
std::vector<double> windowed_mse_serial(const FrameImage& reference, const FrameImage& candidate,
                                        const WindowLayout& layout);

/// Rows split across OpenMP threads into a per-row partial buffer, reduced in
/// row order afterwards, so the result does not depend on the thread count.
std::vector<double> windowed_mse_parallel(const FrameImage& reference, const FrameImage& candidate,
                                          const WindowLayout& layout);

}  // namespace kernels
}  // namespace vlnaug
