#include "vlnaug/action_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"

namespace vlnaug {

void RotationConfig::validate() const {
    if (!(frame_fov_deg > 0.0 && frame_fov_deg <= 360.0)) {
        fail(ErrorKind::kInvalidArgument, "frame_fov_deg must be in (0, 360]");
    }
    if (!(shift_deg > 0.0 && shift_deg < frame_fov_deg)) {
        fail(ErrorKind::kInvalidArgument, "shift_deg must be in (0, frame_fov_deg)");
    }
    if (!(window_deg > 0.0 && window_deg < frame_fov_deg)) {
        fail(ErrorKind::kInvalidArgument, "window_deg must be in (0, frame_fov_deg)");
    }
    if (!(tie_epsilon >= 0.0) || !std::isfinite(tie_epsilon)) {
        fail(ErrorKind::kInvalidArgument, "tie_epsilon must be finite and >= 0");
    }
    if (downscale_width < 0) fail(ErrorKind::kInvalidArgument, "downscale_width must be >= 0");
}

PixelGeometry resolve_geometry(const RotationConfig& cfg, int frame_width) {
    cfg.validate();
    const auto shift = static_cast<int>(std::lround(cfg.shift_deg / cfg.frame_fov_deg * frame_width));
    const auto window = static_cast<int>(std::lround(cfg.window_deg / cfg.frame_fov_deg * frame_width));
    if (window < 1 || window > frame_width - shift) {
        fail(ErrorKind::kDegenerateGeometry,
             "frame width " + std::to_string(frame_width) + " gives R=" + std::to_string(shift) +
                 ", D=" + std::to_string(window) + "; need 1 <= D <= W - R");
    }
    return {shift, window};
}

RotatedFrame rotate_frame(const FrameImage& frame, ContentShift direction, int shift_px) {
    const int w = frame.width();
    if (shift_px < 0 || shift_px >= w) {
        fail(ErrorKind::kInvalidArgument,
             "shift " + std::to_string(shift_px) + " px outside [0, " + std::to_string(w) + ")");
    }
    if (shift_px == 0) return {frame, ValidRegion{0, w}};

    const int ch = frame.channels();
    std::vector<float> out(frame.pixels().size(), 0.0f);
    const std::size_t row_len = static_cast<std::size_t>(w) * ch;
    const std::size_t moved = static_cast<std::size_t>(w - shift_px) * ch;
    const std::size_t offset = static_cast<std::size_t>(shift_px) * ch;
    for (int r = 0; r < frame.height(); ++r) {
        const auto src = frame.row(r);
        float* dst = out.data() + r * row_len;
        if (direction == ContentShift::kRight) {
            std::copy_n(src.begin(), moved, dst + offset);
        } else {
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset), moved, dst);
        }
    }
    const ValidRegion valid = direction == ContentShift::kRight ? ValidRegion{shift_px, w}
                                                                : ValidRegion{0, w - shift_px};
    return {FrameImage(w, frame.height(), ch, std::move(out)), valid};
}

std::vector<double> windowed_mse(const FrameImage& reference, const FrameImage& candidate,
                                 ValidRegion valid, int window_px) {
    if (!reference.same_shape(candidate)) {
        fail(ErrorKind::kInvalidArgument, "windowed_mse: frames differ in shape");
    }
    if (valid.begin < 0 || valid.end > reference.width() || valid.begin > valid.end) {
        fail(ErrorKind::kInvalidArgument, "windowed_mse: valid region outside the frame");
    }
    return kernels::windowed_mse_parallel(reference, candidate, layout_windows(valid, window_px));
}

std::vector<double> windowed_mse(const FrameImage& reference, const FrameImage& candidate,
                                 ValidRegion valid, const RotationConfig& cfg) {
    return windowed_mse(reference, candidate, valid, resolve_geometry(cfg, reference.width()).window_px);
}

std::string_view to_string(Candidate candidate) noexcept {
    switch (candidate) {
        case Candidate::kLeftRotated: return "LEFT_ROTATED";
        case Candidate::kUnchanged: return "UNCHANGED";
        case Candidate::kRightRotated: return "RIGHT_ROTATED";
    }
    return "?";
}

namespace {

void warn_coinciding_windows(int count) {
    static std::once_flag once;
    std::call_once(once, [count] {
        spdlog::warn("only {} comparison window(s) per candidate; leftmost/middle/rightmost coincide", count);
    });
}

ActionPrediction predict_prepared(const FrameImage& frame_t, const FrameImage& frame_t1,
                                  const RotationConfig& cfg) {
    if (!frame_t.same_shape(frame_t1)) {
        fail(ErrorKind::kInvalidArgument, "predict_action: frames differ in shape");
    }
    const int w = frame_t.width();
    const auto geom = resolve_geometry(cfg, w);

    ActionPrediction out;
    auto score = [&](Candidate which, const FrameImage& cand, ValidRegion valid) {
        WindowScores ws;
        ws.candidate = which;
        ws.valid = valid;
        ws.scores = windowed_mse(frame_t, cand, valid, geom.window_px);
        const std::size_t n = ws.scores.size();
        switch (which) {
            case Candidate::kLeftRotated: ws.selected_window = n - 1; break;
            case Candidate::kUnchanged: ws.selected_window = n / 2; break;
            case Candidate::kRightRotated: ws.selected_window = 0; break;
        }
        out.candidates[static_cast<std::size_t>(which)] = std::move(ws);
    };

    const auto left = rotate_frame(frame_t1, ContentShift::kLeft, geom.shift_px);
    const auto right = rotate_frame(frame_t1, ContentShift::kRight, geom.shift_px);
    const int half = geom.shift_px / 2;
    score(Candidate::kLeftRotated, left.frame, left.valid);
    score(Candidate::kUnchanged, frame_t1, ValidRegion{half, w - (geom.shift_px - half)});
    score(Candidate::kRightRotated, right.frame, right.valid);

    out.windows_coincide = out.candidates[0].scores.size() < 3;
    if (out.windows_coincide) warn_coinciding_windows(static_cast<int>(out.candidates[0].scores.size()));

    const double l = out.candidates[0].selected_score();
    const double f = out.candidates[1].selected_score();
    const double r = out.candidates[2].selected_score();
    const double best = std::min({l, f, r});
    const double cutoff = best + cfg.tie_epsilon;
    if (f <= cutoff) {
        out.label = TurnLabel::kForward;
    } else if (l <= cutoff) {
        out.label = TurnLabel::kLeft;
    } else {
        out.label = TurnLabel::kRight;
    }
    return out;
}

void check_sequence(std::span<const FrameImage> frames) {
    if (frames.size() < 2) fail(ErrorKind::kInvalidArgument, "predict_sequence needs at least 2 frames");
    for (const auto& f : frames) {
        if (!f.same_shape(frames.front())) {
            fail(ErrorKind::kInvalidArgument, "predict_sequence: frames differ in shape");
        }
    }
}

}  // namespace

ActionPrediction predict_action(const FrameImage& frame_t, const FrameImage& frame_t1,
                                const RotationConfig& cfg) {
    if (cfg.downscale_width > 0 && frame_t.width() > cfg.downscale_width) {
        return predict_prepared(downscale_to_width(frame_t, cfg.downscale_width),
                                downscale_to_width(frame_t1, cfg.downscale_width), cfg);
    }
    return predict_prepared(frame_t, frame_t1, cfg);
}

std::vector<ActionPrediction> predict_sequence(std::span<const FrameImage> frames,
                                               const RotationConfig& cfg) {
    check_sequence(frames);
    const auto pairs = static_cast<std::ptrdiff_t>(frames.size() - 1);
    std::vector<ActionPrediction> out(static_cast<std::size_t>(pairs));
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < pairs; ++i) {
        try {
            out[i] = predict_action(frames[i], frames[i + 1], cfg);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<ActionPrediction> predict_sequence_serial(std::span<const FrameImage> frames,
                                                      const RotationConfig& cfg) {
    check_sequence(frames);
    std::vector<ActionPrediction> out;
    out.reserve(frames.size() - 1);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) out.push_back(predict_action(frames[i], frames[i + 1], cfg));
    return out;
}

std::vector<TurnLabel> labels_of(std::span<const ActionPrediction> predictions) {
    std::vector<TurnLabel> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions) out.push_back(p.label);
    return out;
}

}  // namespace vlnaug
