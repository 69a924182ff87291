#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vlnaug/jsonl.hpp"
#include "vlnaug/rng.hpp"
#include "vlnaug/trajectory_builder.hpp"

namespace vlnaug {

inline constexpr std::string_view kMaskToken = "[MASK]";

/// Frame reference used by the proxy-task files: the image path, or
/// "<video_id>:<index>" when the sample carries no path.
std::vector<std::string> frame_refs(const VlnSample& sample);

/// Whitespace tokenization of an instruction.
std::vector<std::string> instruction_tokens(std::string_view instruction);

struct MlmConfig {
    double mask_prob = 0.15;
    /// Standard 80/10/10 split of selected tokens into [MASK] / random
    /// vocabulary token / unchanged. When false every selected token becomes [MASK].
    bool replacement_mix = true;

    void validate() const;
};

struct MlmSample {
    std::string sample_id;
    std::vector<std::string> tokens;
    std::vector<std::size_t> masked_positions;
    std::vector<std::string> targets;
    std::vector<std::string> frames;

    /// Original token sequence recovered from the targets.
    [[nodiscard]] std::vector<std::string> unmasked() const;
    [[nodiscard]] OrderedJson to_json() const;
};

/// Selects each token independently with mask_prob, redrawing until at least
/// one is selected. Throws Error(kInvalidArgument) on an empty instruction.
MlmSample build_mlm(const VlnSample& sample, const MlmConfig& cfg, std::span<const std::string> vocabulary, Rng& rng);

enum class ItmCandidateKind { kPositive, kInBatch, kShuffled };
std::string_view to_string(ItmCandidateKind kind) noexcept;

struct ItmSample {
    std::string sample_id;
    std::string instruction;
    std::vector<std::vector<std::string>> candidates;
    std::vector<ItmCandidateKind> kinds;
    std::array<std::string, 2> in_batch_sources;
    std::size_t positive_index = 0;

    [[nodiscard]] OrderedJson to_json() const;
};

inline constexpr std::size_t kItmShuffleRetries = 10;

/// Positive trajectory, two trajectories from distinct other samples in the
/// pool and two order-changing shuffles of the positive, in random order.
/// Returns nullopt (skip) when the trajectory has fewer than two frames or no
/// order-changing shuffle turns up within kItmShuffleRetries attempts.
/// Throws Error(kInvalidArgument) when the pool holds fewer than two other
/// samples.
std::optional<ItmSample> build_itm(const VlnSample& sample, std::span<const VlnSample> pool, Rng& rng);

struct NapSample {
    std::string sample_id;
    std::size_t step = 0;
    std::string instruction;
    std::vector<std::string> history;
    TurnLabel next_action = TurnLabel::kStop;

    [[nodiscard]] OrderedJson to_json() const;
};

/// One record per step t: history frames[0..t], target actions[t], and STOP
/// for the final step. Throws Error(kInvalidArgument) without actions.
std::vector<NapSample> build_nap(const VlnSample& sample);

struct PretrainConfig {
    MlmConfig mlm;
    /// In-batch negatives are drawn from shards of this many samples.
    std::size_t shard_size = 64;
    int workers = 1;

    void validate() const;
};

struct PretrainOutput {
    std::vector<MlmSample> mlm;
    std::vector<ItmSample> itm;
    std::vector<NapSample> nap;
    std::size_t input_samples = 0;
    std::size_t shards = 0;
    std::vector<std::string> skipped;  // "<task>:<sample_id>: reason"

    [[nodiscard]] OrderedJson manifest(std::uint64_t seed, const PretrainConfig& cfg) const;
};

/// Samples are put in sample_id order and cut into shards; a trailing shard
/// too small to supply two in-batch negatives joins the previous one. Every
/// sample and task draws from its own stream seeded by (seed, task, sample_id),
/// so shards can be built in parallel without changing the output.
PretrainOutput build_pretrain(std::span<const VlnSample> samples, const PretrainConfig& cfg, std::uint64_t seed);

}  // namespace vlnaug
