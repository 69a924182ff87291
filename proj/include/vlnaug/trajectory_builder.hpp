#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlnaug/action_predictor.hpp"
#include "vlnaug/detection_store.hpp"
#include "vlnaug/jsonl.hpp"
#include "vlnaug/rng.hpp"
#include "vlnaug/template_engine.hpp"

namespace vlnaug {

struct ManifestFrame {
    long long index = 0;
    std::string path;
    double t = 0.0;
};

struct VideoClip {
    std::string video_id;
    std::vector<ManifestFrame> frames;

    [[nodiscard]] double duration() const { return frames.empty() ? 0.0 : frames.back().t - frames.front().t; }
    /// Non-empty manifest with strictly increasing timestamps; throws
    /// Error(kClipRejected).
    void validate() const;
};

/// Clip manifest JSONL {video_id, frames:[{index, path, t}]}. Relative frame
/// paths are resolved against the manifest's directory. Duplicate video ids
/// throw ParseError.
std::vector<VideoClip> load_clip_manifest(const std::filesystem::path& path);

struct SamplingConfig {
    double interval_s = 1.0;
    int length_min = 25;
    int length_max = 40;

    void validate() const;
};

struct FrameSampling {
    /// Positions into VideoClip::frames, strictly increasing.
    std::vector<std::size_t> positions;
    int target_length = 0;
    /// The clip was too short for target_length; every available grid point was used.
    bool truncated = false;
};

/// Picks frames nearest to t0 + offset + k * interval_s, with the offset
/// uniform over the slack left by a target length drawn uniformly from
/// [length_min, length_max]. Throws Error(kClipRejected) when fewer than two
/// distinct frames can be sampled.
FrameSampling sample_frames(const VideoClip& clip, const SamplingConfig& cfg, Rng& rng);

/// A run of identical primitive actions. Frame positions index the sampled
/// frame list: primitive action i moves from frame i to frame i + 1, so a
/// segment covering actions [a, b) spans frames a..b.
struct ActionSegment {
    TurnLabel action = TurnLabel::kForward;
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;
    std::size_t length = 0;

    friend bool operator==(const ActionSegment&, const ActionSegment&) = default;
};

inline constexpr std::size_t kMaxForwardRun = 6;

/// Maximal runs of equal labels; FORWARD runs are cut greedily into chunks of
/// at most max_forward, turn runs stay whole. Throws Error(kInvalidArgument)
/// on STOP.
std::vector<ActionSegment> merge_actions(std::span<const TurnLabel> primitive,
                                         std::size_t max_forward = kMaxForwardRun);

std::vector<TurnLabel> expand_segments(std::span<const ActionSegment> segments);

struct SentenceProvenance {
    /// Equals the segment count for the terminal STOP sentence.
    std::size_t segment_index = 0;
    std::string template_id;
    std::optional<std::string> object;
};

struct GeneratedInstruction {
    std::string text;
    std::vector<std::string> sentences;
    std::vector<SentenceProvenance> provenance;
};

struct GenerationConfig {
    /// Extra draws allowed when a slotted template finds no object.
    std::size_t max_resample = 5;
    /// Sentences whose object class is avoided for the next fill.
    std::size_t object_cooldown = 2;
    ClassFilter class_filter = ClassFilter::defaults();
};

/// One sentence per segment plus a terminal STOP sentence, joined by single
/// spaces. Objects come from the class-filtered detections of each segment's
/// first frame (the last frame for STOP); frame_detections is indexed by
/// sampled frame position. Throws Error(kGenerationFailed) when a segment can
/// neither be filled nor fall back to a slotless template, and
/// Error(kMissingTemplate) for an empty category.
GeneratedInstruction generate_instruction(std::span<const ActionSegment> segments, const TemplateBank& bank,
                                          std::span<const FrameDetections> frame_detections, Rng& rng,
                                          const GenerationConfig& cfg = {});

struct VlnSample {
    std::string sample_id;
    std::string video_id;
    std::vector<ManifestFrame> frames;
    std::vector<TurnLabel> actions;
    std::vector<ActionSegment> segments;
    std::string instruction;
    std::vector<SentenceProvenance> provenance;

    [[nodiscard]] OrderedJson to_json() const;
    static VlnSample from_json(const Json& record);
};

std::vector<VlnSample> load_samples(const std::filesystem::path& path);

using FrameLoader = std::function<FrameImage(const ManifestFrame&)>;

struct PipelineConfig {
    SamplingConfig sampling;
    RotationConfig rotation;
    GenerationConfig generation;
    /// Defaults to load_frame(frame.path).
    FrameLoader loader;
    int workers = 1;
};

struct ClipFailure {
    std::string video_id;
    std::string stage;
    std::string reason;
};

struct RunReport {
    std::size_t clips_in = 0;
    std::size_t samples_out = 0;
    std::size_t rejected = 0;
    std::size_t truncated = 0;
    std::vector<ClipFailure> failures;
    /// FORWARD, LEFT, RIGHT.
    std::array<std::size_t, 3> action_histogram{};
    std::array<std::size_t, 3> segment_histogram{};

    [[nodiscard]] OrderedJson to_json() const;
};

struct PipelineResult {
    std::vector<VlnSample> samples;  // sorted by video_id
    RunReport report;
};

/// sample_frames -> predict_sequence -> merge_actions -> generate_instruction
/// per clip. Each clip draws from its own stream seeded by (seed, video_id),
/// so the output does not depend on worker count or scheduling. Failures are
/// recorded per clip and never abort the run.
PipelineResult run_pipeline(std::span<const VideoClip> clips, const TemplateBank& bank,
                            const DetectionStore& detections, const PipelineConfig& cfg, std::uint64_t seed);

}  // namespace vlnaug
