#include "vlnaug/mse_kernels.hpp"

#include <string>

#include "vlnaug/error.hpp"

namespace vlnaug {

WindowLayout layout_windows(ValidRegion valid, int window_px) {
    if (window_px < 1) fail(ErrorKind::kDegenerateGeometry, "window width must be >= 1 pixel");
    const int count = valid.width() > 0 ? valid.width() / window_px : 0;
    if (count < 1) {
        fail(ErrorKind::kDegenerateGeometry,
             "no full window of " + std::to_string(window_px) + " px fits in a valid region of " +
                 std::to_string(valid.width()) + " px");
    }
    const int leftover = valid.width() - count * window_px;
    return WindowLayout{valid.begin + leftover / 2, window_px, count};
}

namespace kernels {

std::vector<double> windowed_mse_serial(const FrameImage& reference, const FrameImage& candidate,
                                        const WindowLayout& layout) {
    const int channels = reference.channels();
    const double denom = static_cast<double>(reference.height()) * layout.window_px * channels;
    std::vector<double> scores(static_cast<std::size_t>(layout.count), 0.0);
    for (int k = 0; k < layout.count; ++k) {
        const int c0 = layout.first_column + k * layout.window_px;
        double acc = 0.0;
        for (int r = 0; r < reference.height(); ++r) {
            for (int c = c0; c < c0 + layout.window_px; ++c) {
                for (int ch = 0; ch < channels; ++ch) {
                    const double d = static_cast<double>(reference.at(r, c, ch)) - candidate.at(r, c, ch);
                    acc += d * d;
                }
            }
        }
        scores[k] = acc / denom;
    }
    return scores;
}

std::vector<double> windowed_mse_parallel(const FrameImage& reference, const FrameImage& candidate,
                                          const WindowLayout& layout) {
    const int height = reference.height();
    const int channels = reference.channels();
    const int n = layout.count;
    const std::size_t span = static_cast<std::size_t>(layout.window_px) * channels;
    std::vector<double> partial(static_cast<std::size_t>(height) * n, 0.0);

    // Small frames are not worth a fork/join.
    const bool big = static_cast<long long>(height) * n * static_cast<long long>(span) > 32768;
#pragma omp parallel for schedule(static) if (big)
    for (int r = 0; r < height; ++r) {
        const auto ref_row = reference.row(r);
        const auto cand_row = candidate.row(r);
        for (int k = 0; k < n; ++k) {
            const std::size_t offset = static_cast<std::size_t>(layout.first_column + k * layout.window_px) * channels;
            double acc = 0.0;
            for (std::size_t i = offset; i < offset + span; ++i) {
                const double d = static_cast<double>(ref_row[i]) - cand_row[i];
                acc += d * d;
            }
            partial[static_cast<std::size_t>(r) * n + k] = acc;
        }
    }

    const double denom = static_cast<double>(height) * static_cast<double>(span);
    std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < height; ++r) {
        for (int k = 0; k < n; ++k) scores[k] += partial[static_cast<std::size_t>(r) * n + k];
    }
    for (auto& s : scores) s /= denom;
    return scores;
}

}  // namespace kernels
}  // namespace vlnaug
