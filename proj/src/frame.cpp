#include "vlnaug/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "vlnaug/error.hpp"

namespace vlnaug {

FrameImage::FrameImage(int width, int height, int channels, std::vector<float> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    if (width_ < 1 || height_ < 1) {
        fail(ErrorKind::kInvalidArgument, "frame dimensions must be >= 1");
    }
    if (channels_ != 1 && channels_ != 3) {
        fail(ErrorKind::kInvalidArgument, "frame must have 1 or 3 channels");
    }
    const auto expected = static_cast<std::size_t>(width_) * height_ * channels_;
    if (pixels_.size() != expected) {
        fail(ErrorKind::kInvalidArgument,
             "pixel count " + std::to_string(pixels_.size()) + " != H*W*C " + std::to_string(expected));
    }
    const bool in_range = std::all_of(pixels_.begin(), pixels_.end(),
                                      [](float v) { return v >= 0.0f && v <= 1.0f; });
    if (!in_range) fail(ErrorKind::kInvalidArgument, "frame intensities must lie in [0, 1]");
}

FrameImage FrameImage::filled(int width, int height, int channels, float value) {
    const auto n = static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) * std::max(channels, 0);
    return FrameImage(width, height, channels, std::vector<float>(n, value));
}

FrameImage FrameImage::mirrored() const {
    std::vector<float> out(pixels_.size());
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            for (int ch = 0; ch < channels_; ++ch) {
                out[(static_cast<std::size_t>(r) * width_ + (width_ - 1 - c)) * channels_ + ch] = at(r, c, ch);
            }
        }
    }
    return FrameImage(width_, height_, channels_, std::move(out));
}

namespace {

FrameImage from_mat(const cv::Mat& input) {
    cv::Mat img = input;
    if (img.channels() == 4) {
        cv::cvtColor(img, img, cv::COLOR_BGRA2RGB);
    } else if (img.channels() == 3) {
        cv::cvtColor(img, img, cv::COLOR_BGR2RGB);
    } else if (img.channels() != 1) {
        fail(ErrorKind::kIo, "unsupported channel count " + std::to_string(img.channels()));
    }
    double scale = 1.0;
    switch (img.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F:
        case CV_64F: scale = 1.0; break;
        default: fail(ErrorKind::kIo, "unsupported pixel depth");
    }
    cv::Mat as_float;
    img.convertTo(as_float, CV_32F, scale);
    as_float = cv::min(cv::max(as_float, 0.0), 1.0);
    if (!as_float.isContinuous()) as_float = as_float.clone();
    const auto* data = as_float.ptr<float>();
    std::vector<float> pixels(data, data + as_float.total() * as_float.channels());
    return FrameImage(as_float.cols, as_float.rows, as_float.channels(), std::move(pixels));
}

cv::Mat to_mat(const FrameImage& frame) {
    const int type = frame.channels() == 1 ? CV_32FC1 : CV_32FC3;
    cv::Mat m(frame.height(), frame.width(), type);
    std::copy(frame.pixels().begin(), frame.pixels().end(), m.ptr<float>());
    return m;
}

}  // namespace

FrameImage load_frame(const std::filesystem::path& path) {
    cv::Mat img;
    try {
        img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        fail(ErrorKind::kIo, "cannot decode " + path.string() + ": " + e.what());
    }
    if (img.empty()) fail(ErrorKind::kIo, "cannot read image " + path.string());
    return from_mat(img);
}

void save_frame_png(const FrameImage& frame, const std::filesystem::path& path) {
    cv::Mat m = to_mat(frame);
    if (frame.channels() == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
    cv::Mat bytes;
    m.convertTo(bytes, CV_8U, 255.0);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), bytes)) fail(ErrorKind::kIo, "cannot write " + path.string());
}

FrameImage downscale_to_width(const FrameImage& frame, int target_width) {
    if (target_width <= 0 || frame.width() <= target_width) return frame;
    const int target_height = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(frame.height()) * target_width / frame.width())));
    cv::Mat resized;
    cv::resize(to_mat(frame), resized, cv::Size(target_width, target_height), 0, 0, cv::INTER_AREA);
    resized = cv::min(cv::max(resized, 0.0), 1.0);
    const auto* data = resized.ptr<float>();
    std::vector<float> pixels(data, data + resized.total() * resized.channels());
    return FrameImage(target_width, target_height, frame.channels(), std::move(pixels));
}

}  // namespace vlnaug
