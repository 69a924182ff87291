#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vlnaug/rng.hpp"

namespace vlnaug {

struct FrameRef {
    std::string video_id;
    long long frame_index = 0;

    friend auto operator<=>(const FrameRef&, const FrameRef&) = default;
};

struct Detection {
    std::string class_name;
    double confidence = 0.0;
    std::array<double, 4> bbox{};  // x, y, w, h in pixels
    FrameRef frame;
};

/// Detections of one frame, highest confidence first.
struct FrameDetections {
    FrameRef frame;
    std::vector<Detection> detections;
};

class DetectionStore {
public:
    /// Empty list for frames without a record.
    [[nodiscard]] const FrameDetections& at(const FrameRef& frame) const;
    [[nodiscard]] bool contains(const FrameRef& frame) const { return frames_.count(frame) != 0; }
    [[nodiscard]] std::size_t frame_count() const { return frames_.size(); }
    [[nodiscard]] const std::map<FrameRef, FrameDetections>& frames() const { return frames_; }

    /// Inserts keeping the confidence ordering (stable for equal confidences).
    void insert(Detection d);
    /// Registers a frame with no detections.
    void touch(const FrameRef& frame);

private:
    std::map<FrameRef, FrameDetections> frames_;
};

struct LoadReport {
    std::size_t records = 0;
    std::vector<std::string> warnings;
};

/// Detections JSONL {video_id, frame_index, class_name, confidence, bbox:[x,y,w,h]}.
/// Unknown fields are ignored. Records with confidence outside [0, 1], a
/// negative bbox coordinate or a non-positive size are skipped with a warning
/// (their frame is still registered). Malformed lines throw ParseError.
DetectionStore load_detections(const std::filesystem::path& path, LoadReport* report = nullptr);

/// Lowercase, underscores to spaces, collapsed whitespace, no space before '('.
/// "Car_(Automobile)" -> "car(automobile)".
std::string normalize_class_name(std::string_view name);

/// Human-readable object name for instruction text: the normalized name with
/// any parenthetical qualifier removed ("traffic_light" -> "traffic light").
std::string display_name(std::string_view class_name);

class ClassFilter {
public:
    ClassFilter() = default;
    explicit ClassFilter(const std::vector<std::string>& blocked);

    /// bus, car(automobile), license plate, wheel, rearview mirror, taillight.
    static ClassFilter defaults();
    /// One class per line.
    static ClassFilter load(const std::filesystem::path& path);

    /// Case-insensitive; "car" and "automobile" both match "car(automobile)".
    [[nodiscard]] bool blocks(std::string_view class_name) const;
    [[nodiscard]] bool empty() const { return keys_.empty(); }

private:
    std::set<std::string> keys_;
};

FrameDetections apply_class_filter(const FrameDetections& fd, const ClassFilter& filter);

/// Draws a detection with probability proportional to confidence, skipping
/// classes in recently_used unless that leaves nothing. Returns the detection's
/// class name, or nullopt when there is nothing to draw from. Zero total
/// confidence falls back to a uniform draw.
std::optional<std::string> select_object(const FrameDetections& fd, const std::vector<std::string>& recently_used,
                                         Rng& rng);

/// Classes used by the last `capacity` sentences; sentences without an object
/// occupy a slot too.
class RecentClasses {
public:
    explicit RecentClasses(std::size_t capacity = 2) : capacity_(capacity) {}

    void push(std::optional<std::string> class_name);
    [[nodiscard]] std::vector<std::string> classes() const;

private:
    std::size_t capacity_;
    std::deque<std::optional<std::string>> window_;
};

}  // namespace vlnaug
