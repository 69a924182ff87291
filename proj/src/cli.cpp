#include "vlnaug/cli.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"
#include "vlnaug/jsonl.hpp"
#include "vlnaug/navgraph_metrics.hpp"
#include "vlnaug/pretrain_data.hpp"
#include "vlnaug/scorers.hpp"
#include "vlnaug/template_engine.hpp"

namespace vlnaug::cli {

namespace fs = std::filesystem;

namespace {

struct SettingInfo {
    std::string_view key;
    std::string_view help;
    bool is_flag = false;
};

constexpr SettingInfo kSettings[] = {
    {"corpus", "instruction corpus JSONL {id, text}"},
    {"annotations", "chunk annotations JSONL {sentence_id, tokens, spans}"},
    {"scores", "precomputed template losses JSONL {template_id, probe, loss}"},
    {"scorer_cmd", "scorer command speaking the one-sentence-per-line protocol"},
    {"corpus_id", "corpus identifier recorded in the template bank"},
    {"detections", "detections JSONL {video_id, frame_index, class_name, confidence, bbox}"},
    {"blocklist", "blocked detector classes, one per line"},
    {"clips", "clip manifest JSONL {video_id, frames:[{index, path, t}]}"},
    {"bank", "template bank JSON"},
    {"samples", "VLN samples JSONL"},
    {"graph", "navigation graph JSON"},
    {"batch", "evaluation batch JSONL {sample_id, predicted, gold, goal}"},
    {"interval_s", "frame sampling interval in seconds"},
    {"length_min", "shortest sampled trajectory, in frames"},
    {"length_max", "longest sampled trajectory, in frames"},
    {"window_deg", "comparison window width in degrees"},
    {"shift_deg", "rotation shift in degrees"},
    {"frame_fov_deg", "horizontal field of view of a frame in degrees"},
    {"tie_epsilon", "MSE difference treated as a tie"},
    {"downscale_width", "downscale frames wider than this before comparison (0 = off)"},
    {"keep_fraction", "fraction of templates kept per category by the LM filter"},
    {"fwd_threshold_deg", "heading change below which a graph step is FORWARD"},
    {"mask_prob", "MLM token selection probability"},
    {"shard_size", "samples per shard for in-batch ITM negatives"},
    {"weighted_spd", "use edge lengths for shortest-path distance", true},
    {"derive_actions", "also write graph-derived gold actions", true},
    {"reference_counts", "compare template counts with the reference totals", true},
};

std::string flag_name(std::string_view key) {
    std::string out = "--";
    for (char c : key) out += c == '_' ? '-' : c;
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    fail(ErrorKind::kInvalidArgument, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

double parse_double(std::string_view key, std::string_view value) {
    const std::string s(value);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) bad_value(key, value);
    return v;
}

long long parse_int(std::string_view key, std::string_view value) {
    const std::string s(value);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno == ERANGE) bad_value(key, value);
    return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value);
}

void require_file(const fs::path& path, std::string_view key) {
    if (path.empty()) fail(ErrorKind::kInvalidArgument, "missing required setting " + std::string(key));
    if (!fs::exists(path)) fail(ErrorKind::kIo, std::string(key) + " path does not exist: " + path.string());
}

RotationConfig rotation_of(const RunConfig& cfg) { return cfg.rotation; }

}  // namespace

void RunConfig::validate() const {
    if (workers < 1) fail(ErrorKind::kInvalidArgument, "workers must be >= 1");
    sampling.validate();
    rotation.validate();
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) fail(ErrorKind::kInvalidArgument, "keep_fraction must be in (0, 1]");
    if (!(fwd_threshold_deg > 0.0 && fwd_threshold_deg <= 180.0)) {
        fail(ErrorKind::kInvalidArgument, "fwd_threshold_deg must be in (0, 180]");
    }
    if (!(mask_prob > 0.0 && mask_prob <= 1.0)) fail(ErrorKind::kInvalidArgument, "mask_prob must be in (0, 1]");
    if (shard_size < 3) fail(ErrorKind::kInvalidArgument, "shard_size must be >= 3");
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    const std::string v(value);
    if (key == "seed") {
        const auto s = parse_int(key, value);
        if (s < 0) bad_value(key, value);
        cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "workers") {
        cfg.workers = static_cast<int>(parse_int(key, value));
    } else if (key == "out") {
        cfg.out = v;
    } else if (key == "corpus") {
        cfg.corpus = v;
    } else if (key == "annotations") {
        cfg.annotations = v;
    } else if (key == "scores") {
        cfg.scores = v;
    } else if (key == "scorer_cmd") {
        cfg.scorer_cmd = v;
    } else if (key == "corpus_id") {
        cfg.corpus_id = v;
    } else if (key == "detections") {
        cfg.detections = v;
    } else if (key == "blocklist") {
        cfg.blocklist = v;
    } else if (key == "clips") {
        cfg.clips = v;
    } else if (key == "bank") {
        cfg.bank = v;
    } else if (key == "samples") {
        cfg.samples = v;
    } else if (key == "graph") {
        cfg.graph = v;
    } else if (key == "batch") {
        cfg.batch = v;
    } else if (key == "interval_s") {
        cfg.sampling.interval_s = parse_double(key, value);
    } else if (key == "length_min") {
        cfg.sampling.length_min = static_cast<int>(parse_int(key, value));
    } else if (key == "length_max") {
        cfg.sampling.length_max = static_cast<int>(parse_int(key, value));
    } else if (key == "window_deg") {
        cfg.rotation.window_deg = parse_double(key, value);
    } else if (key == "shift_deg") {
        cfg.rotation.shift_deg = parse_double(key, value);
    } else if (key == "frame_fov_deg") {
        cfg.rotation.frame_fov_deg = parse_double(key, value);
    } else if (key == "tie_epsilon") {
        cfg.rotation.tie_epsilon = parse_double(key, value);
    } else if (key == "downscale_width") {
        cfg.rotation.downscale_width = static_cast<int>(parse_int(key, value));
    } else if (key == "keep_fraction") {
        cfg.keep_fraction = parse_double(key, value);
    } else if (key == "fwd_threshold_deg") {
        cfg.fwd_threshold_deg = parse_double(key, value);
    } else if (key == "mask_prob") {
        cfg.mask_prob = parse_double(key, value);
    } else if (key == "shard_size") {
        const auto s = parse_int(key, value);
        if (s < 0) bad_value(key, value);
        cfg.shard_size = static_cast<std::size_t>(s);
    } else if (key == "weighted_spd") {
        cfg.weighted_spd = parse_bool(key, value);
    } else if (key == "derive_actions") {
        cfg.derive_actions = parse_bool(key, value);
    } else if (key == "reference_counts") {
        cfg.reference_counts = parse_bool(key, value);
    } else {
        fail(ErrorKind::kInvalidArgument, "unknown setting '" + std::string(key) + "'");
    }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    const auto text = read_text_file(path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string{};
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key = value");
        try {
            apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

int cmd_extract_templates(const RunConfig& cfg, std::ostream& out) {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.annotations, "annotations");

    std::unique_ptr<TemplateScorer> scorer;
    if (!cfg.scores.empty()) {
        require_file(cfg.scores, "scores");
        scorer = std::make_unique<ScoreFileScorer>(cfg.scores);
    } else if (!cfg.scorer_cmd.empty()) {
        scorer = std::make_unique<CommandScorer>(cfg.scorer_cmd);
    } else if (cfg.keep_fraction >= 1.0) {
        scorer = std::make_unique<FunctionScorer>([](const ProbeRequest&) { return 0.0; }, "none");
    } else {
        fail(ErrorKind::kInvalidArgument, "keep_fraction < 1 needs a scorer: set scores or scorer_cmd");
    }

    const auto corpus = load_corpus(cfg.corpus);
    const auto annotations = load_annotations(cfg.annotations);
    ExtractionStats stats;
    const auto candidates = extract_candidates(corpus, annotations, &stats);

    LmFilterConfig filter;
    filter.keep_fraction = cfg.keep_fraction;
    filter.corpus_id = cfg.corpus_id.empty() ? cfg.corpus.stem().string() : cfg.corpus_id;
    const auto bank = lm_filter(candidates, *scorer, filter);
    write_text_file(cfg.out / "bank.json", bank.to_json().dump(2) + "\n");

    out << "sentences " << stats.sentences << " (missing annotation " << stats.missing_annotation
        << ", multiple objects " << stats.multiple_objects << ", no direction " << stats.no_direction
        << ", multiple directions " << stats.multiple_directions << ", duplicates " << stats.duplicates << ")\n";
    for (auto c : kAllCategories) {
        out << to_string(c) << " candidates " << bank.metadata.candidate_counts[static_cast<std::size_t>(c)]
            << " retained " << bank.category(c).size() << "\n";
    }
    if (cfg.reference_counts) {
        for (const auto& r : compare_with_reference_counts(bank)) {
            out << "reference " << r.group << ": ours " << r.ours << " vs " << r.reference << " ("
                << std::lround(r.relative_deviation * 100.0) << "% off)" << (r.flagged ? " REVIEW" : "") << "\n";
        }
    }
    return kExitOk;
}

int cmd_predict_actions(const RunConfig& cfg, std::ostream& out) {
    require_file(cfg.clips, "clips");
    const auto clips = load_clip_manifest(cfg.clips);
    const auto rotation = rotation_of(cfg);

    std::vector<std::vector<OrderedJson>> per_clip(clips.size());
    std::vector<std::optional<std::string>> failures(clips.size());
    const auto n = static_cast<std::ptrdiff_t>(clips.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& clip = clips[i];
        try {
            clip.validate();
            std::vector<FrameImage> frames;
            frames.reserve(clip.frames.size());
            for (const auto& f : clip.frames) frames.push_back(load_frame(f.path));
            const auto predictions = predict_sequence(frames, rotation);
            for (std::size_t p = 0; p < predictions.size(); ++p) {
                for (const auto& c : predictions[p].candidates) {
                    OrderedJson rec;
                    rec["video_id"] = clip.video_id;
                    rec["frame_index"] = clip.frames[p].index;
                    rec["candidate"] = std::string(to_string(c.candidate));
                    rec["window_scores"] = c.scores;
                    rec["selected_window"] = c.selected_window;
                    rec["label"] = std::string(to_string(predictions[p].label));
                    per_clip[i].push_back(std::move(rec));
                }
            }
        } catch (const std::exception& e) {
            failures[i] = e.what();
            per_clip[i].clear();
        }
    }

    std::vector<std::size_t> order(clips.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return clips[a].video_id < clips[b].video_id; });
    std::vector<OrderedJson> records;
    OrderedJson report;
    OrderedJson failed = OrderedJson::array();
    for (auto i : order) {
        for (auto& r : per_clip[i]) records.push_back(std::move(r));
        if (failures[i]) {
            spdlog::warn("clip {} failed: {}", clips[i].video_id, *failures[i]);
            failed.push_back(OrderedJson{{"video_id", clips[i].video_id}, {"reason", *failures[i]}});
        }
    }
    report["clips_in"] = clips.size();
    report["clips_failed"] = failed.size();
    report["records"] = records.size();
    report["failures"] = failed;
    write_text_file(cfg.out / "actions.jsonl", to_jsonl(records));
    write_text_file(cfg.out / "predict_report.json", report.dump(2) + "\n");
    out << "clips " << clips.size() << " failed " << failed.size() << " records " << records.size() << "\n";
    return failed.empty() ? kExitOk : kExitPartial;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
    require_file(cfg.clips, "clips");
    require_file(cfg.bank, "bank");
    const auto clips = load_clip_manifest(cfg.clips);
    const auto bank = TemplateBank::load(cfg.bank);
    DetectionStore detections;
    if (!cfg.detections.empty()) {
        require_file(cfg.detections, "detections");
        detections = load_detections(cfg.detections);
    }

    PipelineConfig pipeline;
    pipeline.sampling = cfg.sampling;
    pipeline.rotation = rotation_of(cfg);
    pipeline.workers = cfg.workers;
    if (!cfg.blocklist.empty()) {
        require_file(cfg.blocklist, "blocklist");
        pipeline.generation.class_filter = ClassFilter::load(cfg.blocklist);
    }

    const auto result = run_pipeline(clips, bank, detections, pipeline, cfg.seed);
    std::vector<OrderedJson> records;
    records.reserve(result.samples.size());
    for (const auto& s : result.samples) records.push_back(s.to_json());
    write_text_file(cfg.out / "samples.jsonl", to_jsonl(records));
    write_text_file(cfg.out / "report.json", result.report.to_json().dump(2) + "\n");

    const auto& r = result.report;
    out << "clips " << r.clips_in << " samples " << r.samples_out << " rejected " << r.rejected << "\n";
    out << "actions FORWARD " << r.action_histogram[0] << " LEFT " << r.action_histogram[1] << " RIGHT "
        << r.action_histogram[2] << "\n";
    return r.rejected > 0 ? kExitPartial : kExitOk;
}

int cmd_build_pretrain(const RunConfig& cfg, std::ostream& out) {
    require_file(cfg.samples, "samples");
    const auto samples = load_samples(cfg.samples);
    PretrainConfig pre;
    pre.mlm.mask_prob = cfg.mask_prob;
    pre.shard_size = cfg.shard_size;
    pre.workers = cfg.workers;
    const auto built = build_pretrain(samples, pre, cfg.seed);

    auto dump = [](const auto& items) {
        std::vector<OrderedJson> recs;
        recs.reserve(items.size());
        for (const auto& x : items) recs.push_back(x.to_json());
        return to_jsonl(recs);
    };
    write_text_file(cfg.out / "mlm.jsonl", dump(built.mlm));
    write_text_file(cfg.out / "itm.jsonl", dump(built.itm));
    write_text_file(cfg.out / "nap.jsonl", dump(built.nap));
    write_text_file(cfg.out / "pretrain_manifest.json", built.manifest(cfg.seed, pre).dump(2) + "\n");
    out << "samples " << built.input_samples << " mlm " << built.mlm.size() << " itm " << built.itm.size() << " nap "
        << built.nap.size() << " skipped " << built.skipped.size() << "\n";
    return built.skipped.empty() ? kExitOk : kExitPartial;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    require_file(cfg.graph, "graph");
    require_file(cfg.batch, "batch");
    const auto graph = NavGraph::load(cfg.graph);
    const auto batch = load_eval_batch(cfg.batch);

    std::vector<OrderedJson> results;
    std::vector<OrderedJson> gold_actions;
    double tc_sum = 0.0, spd_sum = 0.0, sed_sum = 0.0;
    for (const auto& rec : batch) {
        EvalResult r;
        try {
            r = evaluate_trajectory(graph, rec.predicted, rec.gold, rec.goal, cfg.weighted_spd);
            if (cfg.derive_actions) {
                OrderedJson acts = OrderedJson::array();
                for (auto a : derive_actions(graph, rec.gold, cfg.fwd_threshold_deg)) acts.push_back(std::string(to_string(a)));
                gold_actions.push_back(OrderedJson{{"sample_id", rec.sample_id}, {"actions", std::move(acts)}});
            }
        } catch (const Error& e) {
            throw ParseError(cfg.batch.string(), rec.line, e.what());
        }
        OrderedJson j;
        j["sample_id"] = rec.sample_id;
        j["tc"] = r.tc;
        j["spd"] = r.spd;
        j["sed"] = r.sed;
        results.push_back(std::move(j));
        tc_sum += r.tc;
        spd_sum += r.spd;
        sed_sum += r.sed;
    }
    const double n = batch.empty() ? 1.0 : static_cast<double>(batch.size());
    OrderedJson summary;
    summary["count"] = batch.size();
    summary["tc"] = tc_sum / n;
    summary["spd"] = spd_sum / n;
    summary["sed"] = sed_sum / n;
    write_text_file(cfg.out / "metrics.jsonl", to_jsonl(results));
    write_text_file(cfg.out / "metrics_summary.json", summary.dump(2) + "\n");
    if (cfg.derive_actions) write_text_file(cfg.out / "gold_actions.jsonl", to_jsonl(gold_actions));
    out << "samples " << batch.size() << " TC " << summary["tc"].get<double>() << " SPD "
        << summary["spd"].get<double>() << " SED " << summary["sed"].get<double>() << "\n";
    return kExitOk;
}

namespace {

void configure_logging(const std::string& level) {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("vlnaug");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    });
    spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Driving-video to VLN data augmentation toolkit", "vlnaug"};
    app.require_subcommand(1);

    std::string config_path;
    std::string log_level = "warn";
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    app.add_option("--config", config_path, "key = value settings file; flags override it");
    options["seed"] = app.add_option("--seed", values["seed"], "random seed");
    options["workers"] = app.add_option("--workers", values["workers"], "parallel workers");
    options["out"] = app.add_option("--out", values["out"], "output directory");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");
    std::map<std::string, bool> flags;
    for (const auto& s : kSettings) {
        const std::string key(s.key);
        if (s.is_flag) {
            flags[key] = false;
            options[key] = app.add_flag(flag_name(s.key), flags[key], std::string(s.help));
        } else {
            options[key] = app.add_option(flag_name(s.key), values[key], std::string(s.help));
        }
    }

    using Command = int (*)(const RunConfig&, std::ostream&);
    const std::pair<const char*, Command> commands[] = {
        {"extract-templates", cmd_extract_templates},
        {"predict-actions", cmd_predict_actions},
        {"generate", cmd_generate},
        {"build-pretrain", cmd_build_pretrain},
        {"evaluate", cmd_evaluate},
    };
    const char* help[] = {
        "mask, filter and rank instruction templates into a bank",
        "label consecutive frame pairs with FORWARD/LEFT/RIGHT",
        "build VLN samples from clips, templates and detections",
        "emit MLM/ITM/NAP proxy-task files from samples",
        "score trajectories with TC/SPD/SED on a navigation graph",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        auto* sub = app.add_subcommand(commands[i].first, help[i]);
        sub->fallthrough();
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        configure_logging(log_level);
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            if (flags.count(key)) {
                apply_setting(cfg, key, flags[key] ? "true" : "false");
            } else {
                apply_setting(cfg, key, values[key]);
            }
        }
        cfg.validate();
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return commands[i].second(cfg, out);
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace vlnaug::cli
