#include "vlnaug/trajectory_builder.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"

namespace vlnaug {

void VideoClip::validate() const {
    if (frames.empty()) fail(ErrorKind::kClipRejected, "clip " + video_id + " has an empty frame manifest");
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!(frames[i].t > frames[i - 1].t)) {
            fail(ErrorKind::kClipRejected, "clip " + video_id + ": timestamps not strictly increasing at frame " +
                                               std::to_string(frames[i].index));
        }
    }
}

std::vector<VideoClip> load_clip_manifest(const std::filesystem::path& path) {
    const auto base = path.parent_path();
    std::vector<VideoClip> clips;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        VideoClip clip;
        clip.video_id = rec.at("video_id").is_string() ? rec.at("video_id").get<std::string>()
                                                       : rec.at("video_id").dump();
        for (const auto& f : rec.at("frames")) {
            ManifestFrame mf;
            mf.index = f.at("index").get<long long>();
            mf.t = f.at("t").get<double>();
            std::filesystem::path p = f.at("path").get<std::string>();
            mf.path = (p.is_absolute() || base.empty() ? p : base / p).lexically_normal().string();
            clip.frames.push_back(std::move(mf));
        }
        if (!seen.insert(clip.video_id).second) {
            throw ParseError(path.string(), line, "duplicate video_id " + clip.video_id);
        }
        clips.push_back(std::move(clip));
    });
    return clips;
}

void SamplingConfig::validate() const {
    if (!(interval_s > 0.0) || !std::isfinite(interval_s)) fail(ErrorKind::kInvalidArgument, "interval_s must be > 0");
    if (length_min < 2 || length_max < length_min) {
        fail(ErrorKind::kInvalidArgument, "length range must satisfy 2 <= length_min <= length_max");
    }
}

namespace {

constexpr double kTimeTolerance = 1e-9;

std::size_t nearest_frame(const VideoClip& clip, double t) {
    const auto& f = clip.frames;
    const auto it = std::lower_bound(f.begin(), f.end(), t, [](const ManifestFrame& m, double v) { return m.t < v; });
    if (it == f.begin()) return 0;
    if (it == f.end()) return f.size() - 1;
    const auto hi = static_cast<std::size_t>(it - f.begin());
    // Ties go to the earlier frame.
    return (it->t - t) < (t - f[hi - 1].t) ? hi : hi - 1;
}

}  // namespace

FrameSampling sample_frames(const VideoClip& clip, const SamplingConfig& cfg, Rng& rng) {
    cfg.validate();
    clip.validate();
    const double duration = clip.duration();
    if (clip.frames.size() < 2 || duration + kTimeTolerance < cfg.interval_s) {
        fail(ErrorKind::kClipRejected, "clip " + clip.video_id + " is too short for two frames at " +
                                           std::to_string(cfg.interval_s) + " s spacing");
    }

    FrameSampling out;
    out.target_length = static_cast<int>(rng.uniform_int(cfg.length_min, cfg.length_max));
    const double needed = (out.target_length - 1) * cfg.interval_s;
    const double slack = duration - needed;
    double offset = 0.0;
    int count = out.target_length;
    if (slack >= -kTimeTolerance) {
        offset = rng.uniform(0.0, std::max(slack, 0.0));
    } else {
        count = static_cast<int>(std::floor(duration / cfg.interval_s + kTimeTolerance)) + 1;
        out.truncated = true;
        spdlog::warn("clip {}: {:.3f} s is shorter than a {}-frame trajectory, using {} frames", clip.video_id,
                     duration, out.target_length, count);
    }

    const double t0 = clip.frames.front().t + offset;
    for (int k = 0; k < count; ++k) {
        const auto pos = nearest_frame(clip, t0 + k * cfg.interval_s);
        if (out.positions.empty() || pos > out.positions.back()) out.positions.push_back(pos);
    }
    if (out.positions.size() < 2) {
        fail(ErrorKind::kClipRejected, "clip " + clip.video_id + " yields fewer than two distinct sampled frames");
    }
    return out;
}

std::vector<ActionSegment> merge_actions(std::span<const TurnLabel> primitive, std::size_t max_forward) {
    if (max_forward == 0) fail(ErrorKind::kInvalidArgument, "max_forward must be >= 1");
    std::vector<ActionSegment> out;
    std::size_t i = 0;
    while (i < primitive.size()) {
        const auto label = primitive[i];
        if (label == TurnLabel::kStop) fail(ErrorKind::kInvalidArgument, "STOP cannot appear in a primitive sequence");
        std::size_t j = i + 1;
        while (j < primitive.size() && primitive[j] == label) ++j;
        if (label == TurnLabel::kForward) {
            for (std::size_t s = i; s < j; s += max_forward) {
                const std::size_t e = std::min(j, s + max_forward);
                out.push_back({label, s, e, e - s});
            }
        } else {
            out.push_back({label, i, j, j - i});
        }
        i = j;
    }
    return out;
}

std::vector<TurnLabel> expand_segments(std::span<const ActionSegment> segments) {
    std::vector<TurnLabel> out;
    for (const auto& s : segments) out.insert(out.end(), s.length, s.action);
    return out;
}

GeneratedInstruction generate_instruction(std::span<const ActionSegment> segments, const TemplateBank& bank,
                                          std::span<const FrameDetections> frame_detections, Rng& rng,
                                          const GenerationConfig& cfg) {
    if (frame_detections.empty()) fail(ErrorKind::kInvalidArgument, "generate_instruction needs the sampled frames");
    TemplateSampler sampler(bank);
    RecentClasses recent(cfg.object_cooldown);
    GeneratedInstruction out;

    const std::size_t n = segments.size();
    for (std::size_t i = 0; i <= n; ++i) {
        const bool terminal = i == n;
        const auto category = terminal ? TemplateCategory::kStop : category_for(segments[i].action);
        const std::size_t frame_pos = terminal ? frame_detections.size() - 1 : segments[i].start_frame;
        if (frame_pos >= frame_detections.size()) {
            fail(ErrorKind::kInvalidArgument, "segment starts beyond the sampled frames");
        }
        const auto candidates = apply_class_filter(frame_detections[frame_pos], cfg.class_filter);

        const ScoredTemplate* chosen = nullptr;
        std::optional<std::string> object;
        for (std::size_t attempt = 0; attempt <= cfg.max_resample && !chosen; ++attempt) {
            const auto& t = sampler.draw(category, rng);
            if (!t.tmpl.has_slot()) {
                chosen = &t;
            } else if (auto obj = select_object(candidates, recent.classes(), rng)) {
                chosen = &t;
                object = std::move(obj);
            }
        }
        if (!chosen) {
            std::vector<const ScoredTemplate*> slotless;
            for (const auto& t : bank.category(category)) {
                if (!t.tmpl.has_slot()) slotless.push_back(&t);
            }
            if (slotless.empty()) {
                fail(ErrorKind::kGenerationFailed, "no object available and no slotless " +
                                                       std::string(to_string(category)) + " template");
            }
            chosen = slotless[rng.uniform_index(slotless.size())];
        }

        const auto name = object ? std::optional<std::string>(display_name(*object)) : std::nullopt;
        out.sentences.push_back(fill_template(chosen->tmpl, name));
        out.provenance.push_back({i, chosen->tmpl.id, object});
        recent.push(object);
    }

    for (const auto& s : out.sentences) {
        if (!out.text.empty()) out.text += ' ';
        out.text += s;
    }
    return out;
}

OrderedJson VlnSample::to_json() const {
    OrderedJson j;
    j["sample_id"] = sample_id;
    j["video_id"] = video_id;
    OrderedJson fr = OrderedJson::array();
    for (const auto& f : frames) fr.push_back(OrderedJson{{"index", f.index}, {"path", f.path}, {"t", f.t}});
    j["frames"] = std::move(fr);
    OrderedJson acts = OrderedJson::array();
    for (auto a : actions) acts.push_back(std::string(to_string(a)));
    j["actions"] = std::move(acts);
    OrderedJson segs = OrderedJson::array();
    for (const auto& s : segments) {
        segs.push_back(OrderedJson{{"action", std::string(to_string(s.action))},
                                   {"start_frame", s.start_frame},
                                   {"end_frame", s.end_frame},
                                   {"length", s.length}});
    }
    j["segments"] = std::move(segs);
    j["instruction"] = instruction;
    OrderedJson prov = OrderedJson::array();
    for (const auto& p : provenance) {
        OrderedJson e;
        e["segment_index"] = p.segment_index;
        e["template_id"] = p.template_id;
        e["object"] = p.object ? OrderedJson(*p.object) : OrderedJson(nullptr);
        prov.push_back(std::move(e));
    }
    j["provenance"] = std::move(prov);
    return j;
}

namespace {

TurnLabel label_from_json(const Json& v) {
    const auto label = parse_turn_label(v.get<std::string>());
    if (!label) fail(ErrorKind::kParse, "unknown action label " + v.dump());
    return *label;
}

}  // namespace

VlnSample VlnSample::from_json(const Json& rec) {
    VlnSample s;
    s.sample_id = rec.at("sample_id").get<std::string>();
    s.video_id = rec.at("video_id").get<std::string>();
    for (const auto& f : rec.at("frames")) {
        s.frames.push_back({f.at("index").get<long long>(), f.value("path", ""), f.value("t", 0.0)});
    }
    for (const auto& a : rec.at("actions")) s.actions.push_back(label_from_json(a));
    for (const auto& g : rec.at("segments")) {
        s.segments.push_back({label_from_json(g.at("action")), g.at("start_frame").get<std::size_t>(),
                              g.at("end_frame").get<std::size_t>(), g.at("length").get<std::size_t>()});
    }
    s.instruction = rec.at("instruction").get<std::string>();
    for (const auto& p : rec.value("provenance", Json::array())) {
        SentenceProvenance sp;
        sp.segment_index = p.at("segment_index").get<std::size_t>();
        sp.template_id = p.at("template_id").get<std::string>();
        if (p.contains("object") && !p.at("object").is_null()) sp.object = p.at("object").get<std::string>();
        s.provenance.push_back(std::move(sp));
    }
    return s;
}

std::vector<VlnSample> load_samples(const std::filesystem::path& path) {
    std::vector<VlnSample> out;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        try {
            out.push_back(VlnSample::from_json(rec));
        } catch (const Error& e) {
            throw ParseError(path.string(), line, e.what());
        }
    });
    return out;
}

OrderedJson RunReport::to_json() const {
    auto histogram = [](const std::array<std::size_t, 3>& h) {
        return OrderedJson{{"FORWARD", h[0]}, {"LEFT", h[1]}, {"RIGHT", h[2]}};
    };
    OrderedJson j;
    j["clips_in"] = clips_in;
    j["samples_out"] = samples_out;
    j["rejected"] = rejected;
    j["truncated"] = truncated;
    j["action_histogram"] = histogram(action_histogram);
    j["segment_histogram"] = histogram(segment_histogram);
    OrderedJson f = OrderedJson::array();
    for (const auto& x : failures) f.push_back(OrderedJson{{"video_id", x.video_id}, {"stage", x.stage}, {"reason", x.reason}});
    j["failures"] = std::move(f);
    return j;
}

namespace {

struct ClipOutcome {
    std::optional<VlnSample> sample;
    std::optional<ClipFailure> failure;
    bool truncated = false;
};

std::size_t histogram_slot(TurnLabel l) {
    switch (l) {
        case TurnLabel::kLeft: return 1;
        case TurnLabel::kRight: return 2;
        default: return 0;
    }
}

ClipOutcome process_clip(const VideoClip& clip, const TemplateBank& bank, const DetectionStore& detections,
                         const PipelineConfig& cfg, const FrameLoader& loader, std::uint64_t seed) {
    ClipOutcome outcome;
    std::string stage = "sample_frames";
    try {
        Rng rng(derive_seed(seed, clip.video_id));
        const auto sampling = sample_frames(clip, cfg.sampling, rng);
        outcome.truncated = sampling.truncated;

        stage = "load_frames";
        std::vector<FrameImage> images;
        images.reserve(sampling.positions.size());
        for (auto pos : sampling.positions) images.push_back(loader(clip.frames[pos]));

        stage = "predict_actions";
        const auto predictions = predict_sequence(images, cfg.rotation);

        stage = "merge_actions";
        VlnSample sample;
        sample.sample_id = clip.video_id;
        sample.video_id = clip.video_id;
        for (auto pos : sampling.positions) sample.frames.push_back(clip.frames[pos]);
        sample.actions = labels_of(predictions);
        sample.segments = merge_actions(sample.actions);

        stage = "generate_instruction";
        std::vector<FrameDetections> per_frame;
        per_frame.reserve(sample.frames.size());
        for (const auto& f : sample.frames) per_frame.push_back(detections.at(FrameRef{clip.video_id, f.index}));
        auto generated = generate_instruction(sample.segments, bank, per_frame, rng, cfg.generation);
        sample.instruction = std::move(generated.text);
        sample.provenance = std::move(generated.provenance);
        outcome.sample = std::move(sample);
    } catch (const Error& e) {
        outcome.failure = ClipFailure{clip.video_id, stage, std::string(to_string(e.kind())) + ": " + e.what()};
    } catch (const std::exception& e) {
        outcome.failure = ClipFailure{clip.video_id, stage, e.what()};
    }
    if (outcome.failure) {
        spdlog::warn("clip {} failed at {}: {}", clip.video_id, outcome.failure->stage, outcome.failure->reason);
    }
    return outcome;
}

}  // namespace

PipelineResult run_pipeline(std::span<const VideoClip> clips, const TemplateBank& bank,
                            const DetectionStore& detections, const PipelineConfig& cfg, std::uint64_t seed) {
    cfg.sampling.validate();
    cfg.rotation.validate();
    const FrameLoader loader = cfg.loader ? cfg.loader : [](const ManifestFrame& f) { return load_frame(f.path); };

    std::vector<ClipOutcome> outcomes(clips.size());
    const auto n = static_cast<std::ptrdiff_t>(clips.size());
    const int workers = std::max(1, cfg.workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        outcomes[i] = process_clip(clips[i], bank, detections, cfg, loader, seed);
    }

    PipelineResult result;
    result.report.clips_in = clips.size();
    for (auto& o : outcomes) {
        if (o.truncated) ++result.report.truncated;
        if (o.failure) {
            ++result.report.rejected;
            result.report.failures.push_back(std::move(*o.failure));
            continue;
        }
        for (auto a : o.sample->actions) ++result.report.action_histogram[histogram_slot(a)];
        for (const auto& s : o.sample->segments) ++result.report.segment_histogram[histogram_slot(s.action)];
        result.samples.push_back(std::move(*o.sample));
    }
    result.report.samples_out = result.samples.size();
    std::sort(result.samples.begin(), result.samples.end(),
              [](const VlnSample& a, const VlnSample& b) { return a.video_id < b.video_id; });
    std::sort(result.report.failures.begin(), result.report.failures.end(),
              [](const ClipFailure& a, const ClipFailure& b) { return a.video_id < b.video_id; });
    return result;
}

}  // namespace vlnaug
