#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace vlnaug {

/// Row-major H x W x C grid of intensities in [0, 1]; immutable once built.
class FrameImage {
public:
    /// Throws Error(kInvalidArgument) if dimensions, pixel count or intensity
    /// range are violated.
    FrameImage(int width, int height, int channels, std::vector<float> pixels);

    static FrameImage filled(int width, int height, int channels, float value);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }

    [[nodiscard]] float at(int row, int col, int channel = 0) const noexcept {
        return pixels_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + channel];
    }

    /// One image row, W * C interleaved values.
    [[nodiscard]] std::span<const float> row(int r) const noexcept {
        const std::size_t stride = static_cast<std::size_t>(width_) * channels_;
        return {pixels_.data() + r * stride, stride};
    }

    [[nodiscard]] std::span<const float> pixels() const noexcept { return pixels_; }

    [[nodiscard]] bool same_shape(const FrameImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    /// Left-right mirror image.
    [[nodiscard]] FrameImage mirrored() const;

    friend bool operator==(const FrameImage&, const FrameImage&) = default;

private:
    int width_;
    int height_;
    int channels_;
    std::vector<float> pixels_;
};

/// Reads a PNG or JPEG. Grayscale stays single-channel, colour becomes RGB,
/// alpha is dropped. Throws Error(kIo) on unreadable or corrupt files.
FrameImage load_frame(const std::filesystem::path& path);

/// Writes an 8-bit PNG (intensities quantized to 1/255).
void save_frame_png(const FrameImage& frame, const std::filesystem::path& path);

/// Area-averaged downscale to target_width, keeping aspect ratio. Frames
/// already at or below target_width are returned unchanged.
FrameImage downscale_to_width(const FrameImage& frame, int target_width);

}  // namespace vlnaug
