#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "vlnaug/action_predictor.hpp"
#include "vlnaug/trajectory_builder.hpp"

namespace vlnaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInputError = 2;

/// Every setting a subcommand may need. Keys in the config file use the same
/// names as the long flags with '-' replaced by '_'.
struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    std::filesystem::path out = "out";

    std::filesystem::path corpus;
    std::filesystem::path annotations;
    std::filesystem::path scores;
    std::string scorer_cmd;
    std::string corpus_id;
    std::filesystem::path detections;
    std::filesystem::path blocklist;
    std::filesystem::path clips;
    std::filesystem::path bank;
    std::filesystem::path samples;
    std::filesystem::path graph;
    std::filesystem::path batch;

    SamplingConfig sampling;
    RotationConfig rotation;
    double keep_fraction = 0.5;
    double fwd_threshold_deg = 45.0;
    double mask_prob = 0.15;
    std::size_t shard_size = 64;
    bool weighted_spd = false;
    bool derive_actions = false;
    bool reference_counts = false;

    /// Range checks for every tunable; throws Error(kInvalidArgument).
    void validate() const;
};

/// Sets one key from its textual value. Throws Error(kInvalidArgument) for
/// unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// "key = value" lines; '#' starts a comment. Relative paths stay relative to
/// the working directory.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Each command writes its files under cfg.out, prints a short summary to
// `out` and returns an exit code.
int cmd_extract_templates(const RunConfig& cfg, std::ostream& out);
int cmd_predict_actions(const RunConfig& cfg, std::ostream& out);
int cmd_generate(const RunConfig& cfg, std::ostream& out);
int cmd_build_pretrain(const RunConfig& cfg, std::ostream& out);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out);

/// Full command line: parses arguments, merges config file and flags (flags
/// win), validates, dispatches, and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vlnaug::cli
