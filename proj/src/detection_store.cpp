#include "vlnaug/detection_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"
#include "vlnaug/jsonl.hpp"

namespace vlnaug {

const FrameDetections& DetectionStore::at(const FrameRef& frame) const {
    static const FrameDetections kEmpty{};
    const auto it = frames_.find(frame);
    return it == frames_.end() ? kEmpty : it->second;
}

void DetectionStore::insert(Detection d) {
    auto& fd = frames_[d.frame];
    fd.frame = d.frame;
    const auto pos = std::upper_bound(fd.detections.begin(), fd.detections.end(), d.confidence,
                                      [](double c, const Detection& x) { return c > x.confidence; });
    fd.detections.insert(pos, std::move(d));
}

void DetectionStore::touch(const FrameRef& frame) {
    frames_[frame].frame = frame;
}

DetectionStore load_detections(const std::filesystem::path& path, LoadReport* report) {
    DetectionStore store;
    LoadReport local;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        ++local.records;
        Detection d;
        d.frame.video_id = rec.at("video_id").is_string() ? rec.at("video_id").get<std::string>()
                                                          : rec.at("video_id").dump();
        d.frame.frame_index = rec.at("frame_index").get<long long>();
        d.class_name = rec.at("class_name").get<std::string>();
        d.confidence = rec.at("confidence").get<double>();
        const auto& box = rec.at("bbox");
        if (!box.is_array() || box.size() != 4) throw ParseError(path.string(), line, "bbox must be [x, y, w, h]");
        for (std::size_t i = 0; i < 4; ++i) d.bbox[i] = box.at(i).get<double>();

        std::string problem;
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
            problem = "confidence outside [0, 1]";
        } else if (d.bbox[0] < 0.0 || d.bbox[1] < 0.0) {
            problem = "negative bbox coordinate";
        } else if (!(d.bbox[2] > 0.0 && d.bbox[3] > 0.0)) {
            problem = "non-positive bbox size";
        } else if (d.class_name.empty()) {
            problem = "empty class_name";
        }
        if (!problem.empty()) {
            auto msg = path.string() + ":" + std::to_string(line) + ": skipped detection, " + problem;
            spdlog::warn("{}", msg);
            local.warnings.push_back(std::move(msg));
            store.touch(d.frame);
            return;
        }
        store.insert(std::move(d));
    });
    if (report) *report = std::move(local);
    return store;
}

std::string normalize_class_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (char ch : name) {
        auto c = static_cast<unsigned char>(ch);
        if (c == '_' || std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space && c != '(' && c != ')') out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::string display_name(std::string_view class_name) {
    auto norm = normalize_class_name(class_name);
    const auto paren = norm.find('(');
    if (paren != std::string::npos && paren > 0) norm.erase(paren);
    while (!norm.empty() && norm.back() == ' ') norm.pop_back();
    return norm;
}

namespace {

/// Full name, the base before '(' and the parenthetical alias.
std::vector<std::string> match_keys(std::string_view name) {
    const auto norm = normalize_class_name(name);
    std::vector<std::string> keys{norm};
    const auto open = norm.find('(');
    const auto close = norm.rfind(')');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        auto base = norm.substr(0, open);
        while (!base.empty() && base.back() == ' ') base.pop_back();
        const auto alias = norm.substr(open + 1, close - open - 1);
        if (!base.empty()) keys.push_back(base);
        if (!alias.empty()) keys.push_back(alias);
    }
    return keys;
}

}  // namespace

ClassFilter::ClassFilter(const std::vector<std::string>& blocked) {
    for (const auto& b : blocked) {
        for (auto& k : match_keys(b)) keys_.insert(std::move(k));
    }
}

ClassFilter ClassFilter::defaults() {
    return ClassFilter({"bus", "car(automobile)", "license plate", "wheel", "rearview mirror", "taillight"});
}

ClassFilter ClassFilter::load(const std::filesystem::path& path) {
    return ClassFilter(read_lines(path));
}

bool ClassFilter::blocks(std::string_view class_name) const {
    for (const auto& k : match_keys(class_name)) {
        if (keys_.count(k)) return true;
    }
    return false;
}

FrameDetections apply_class_filter(const FrameDetections& fd, const ClassFilter& filter) {
    FrameDetections out{fd.frame, {}};
    std::copy_if(fd.detections.begin(), fd.detections.end(), std::back_inserter(out.detections),
                 [&](const Detection& d) { return !filter.blocks(d.class_name); });
    return out;
}

std::optional<std::string> select_object(const FrameDetections& fd, const std::vector<std::string>& recently_used,
                                         Rng& rng) {
    if (fd.detections.empty()) return std::nullopt;
    auto recent = [&](const Detection& d) {
        const auto key = normalize_class_name(d.class_name);
        return std::any_of(recently_used.begin(), recently_used.end(),
                           [&](const std::string& r) { return normalize_class_name(r) == key; });
    };
    std::vector<const Detection*> pool;
    for (const auto& d : fd.detections) {
        if (!recent(d)) pool.push_back(&d);
    }
    if (pool.empty()) {
        for (const auto& d : fd.detections) pool.push_back(&d);
    }
    std::vector<double> weights;
    weights.reserve(pool.size());
    double total = 0.0;
    for (const auto* d : pool) {
        weights.push_back(d->confidence);
        total += d->confidence;
    }
    const std::size_t pick = total > 0.0 ? rng.weighted_index(weights) : rng.uniform_index(pool.size());
    return pool[pick]->class_name;
}

void RecentClasses::push(std::optional<std::string> class_name) {
    window_.push_back(std::move(class_name));
    while (window_.size() > capacity_) window_.pop_front();
}

std::vector<std::string> RecentClasses::classes() const {
    std::vector<std::string> out;
    for (const auto& c : window_) {
        if (c) out.push_back(*c);
    }
    return out;
}

}  // namespace vlnaug
