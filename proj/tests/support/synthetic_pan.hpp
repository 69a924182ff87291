#pragma once

// Ground-truth generator for the rotation predictor. A panorama texture is
// viewed at a heading; a left camera turn lowers the heading, which moves the
// visible content to the right in the next frame.

#include <vector>

#include "vlnaug/frame.hpp"
#include "vlnaug/rng.hpp"
#include "vlnaug/turn_label.hpp"

namespace vlnaug::testing {

struct Panorama {
    int width = 0;  // pixels per 360 degrees
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    [[nodiscard]] float at(int row, int col, int ch) const {
        const int c = ((col % width) + width) % width;
        return data[(static_cast<std::size_t>(row) * width + c) * channels + ch];
    }
};

/// Vertical stripes 10 to 40 degrees wide; neighbouring stripes differ by at
/// least 0.25 in intensity.
Panorama stripe_panorama(int width, int height, int channels, Rng& rng);

/// Per-pixel noise smoothed horizontally with a circular box filter.
Panorama noise_panorama(int width, int height, int channels, Rng& rng);

/// View of `fov_deg` degrees starting at heading_deg, frame_width pixels wide,
/// plus clamped Gaussian pixel noise when noise_sigma > 0.
FrameImage view(const Panorama& pano, double heading_deg, double fov_deg, int frame_width, double noise_sigma,
                Rng& rng);

struct PanSequence {
    std::vector<FrameImage> frames;
    std::vector<TurnLabel> truth;
    /// Pan of each step in degrees (0 for FORWARD).
    std::vector<double> pans_deg;
};

/// Frames at cumulative headings; each step is FORWARD (no rotation), LEFT
/// (heading decreases by a random pan in [min_pan, max_pan]) or RIGHT.
PanSequence pan_sequence(const Panorama& pano, const std::vector<TurnLabel>& steps, double min_pan_deg,
                         double max_pan_deg, double fov_deg, int frame_width, double noise_sigma, Rng& rng);

}  // namespace vlnaug::testing
