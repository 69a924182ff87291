#include "vlnaug/pretrain_data.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"

namespace vlnaug {

std::vector<std::string> frame_refs(const VlnSample& sample) {
    std::vector<std::string> out;
    out.reserve(sample.frames.size());
    for (const auto& f : sample.frames) {
        out.push_back(f.path.empty() ? sample.video_id + ":" + std::to_string(f.index) : f.path);
    }
    return out;
}

std::vector<std::string> instruction_tokens(std::string_view instruction) {
    std::vector<std::string> out;
    std::istringstream in{std::string(instruction)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

void MlmConfig::validate() const {
    if (!(mask_prob > 0.0 && mask_prob <= 1.0)) fail(ErrorKind::kInvalidArgument, "mask_prob must be in (0, 1]");
}

std::vector<std::string> MlmSample::unmasked() const {
    auto out = tokens;
    for (std::size_t i = 0; i < masked_positions.size(); ++i) out[masked_positions[i]] = targets[i];
    return out;
}

namespace {

OrderedJson string_array(const std::vector<std::string>& v) {
    OrderedJson a = OrderedJson::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

}  // namespace

OrderedJson MlmSample::to_json() const {
    OrderedJson j;
    j["sample_id"] = sample_id;
    j["tokens"] = string_array(tokens);
    j["masked_positions"] = masked_positions;
    j["targets"] = string_array(targets);
    j["frames"] = string_array(frames);
    return j;
}

MlmSample build_mlm(const VlnSample& sample, const MlmConfig& cfg, std::span<const std::string> vocabulary, Rng& rng) {
    cfg.validate();
    const auto original = instruction_tokens(sample.instruction);
    if (original.empty()) fail(ErrorKind::kInvalidArgument, "sample " + sample.sample_id + " has an empty instruction");

    MlmSample out;
    out.sample_id = sample.sample_id;
    out.frames = frame_refs(sample);
    while (out.masked_positions.empty()) {
        for (std::size_t i = 0; i < original.size(); ++i) {
            if (rng.bernoulli(cfg.mask_prob)) out.masked_positions.push_back(i);
        }
    }
    out.tokens = original;
    for (auto pos : out.masked_positions) {
        out.targets.push_back(original[pos]);
        if (!cfg.replacement_mix) {
            out.tokens[pos] = kMaskToken;
            continue;
        }
        const double u = rng.uniform01();
        if (u < 0.8 || vocabulary.empty()) {
            out.tokens[pos] = kMaskToken;
        } else if (u < 0.9) {
            out.tokens[pos] = vocabulary[rng.uniform_index(vocabulary.size())];
        }
    }
    return out;
}

std::string_view to_string(ItmCandidateKind kind) noexcept {
    switch (kind) {
        case ItmCandidateKind::kPositive: return "positive";
        case ItmCandidateKind::kInBatch: return "in_batch";
        case ItmCandidateKind::kShuffled: return "shuffled";
    }
    return "?";
}

OrderedJson ItmSample::to_json() const {
    OrderedJson j;
    j["sample_id"] = sample_id;
    j["instruction"] = instruction;
    OrderedJson c = OrderedJson::array();
    for (const auto& t : candidates) c.push_back(string_array(t));
    j["candidates"] = std::move(c);
    OrderedJson k = OrderedJson::array();
    for (auto kind : kinds) k.push_back(std::string(to_string(kind)));
    j["candidate_kinds"] = std::move(k);
    j["in_batch_sources"] = OrderedJson::array({in_batch_sources[0], in_batch_sources[1]});
    j["positive_index"] = positive_index;
    return j;
}

std::optional<ItmSample> build_itm(const VlnSample& sample, std::span<const VlnSample> pool, Rng& rng) {
    std::vector<const VlnSample*> others;
    for (const auto& p : pool) {
        if (p.sample_id != sample.sample_id) others.push_back(&p);
    }
    if (others.size() < 2) {
        fail(ErrorKind::kInvalidArgument, "ITM pool for " + sample.sample_id + " has fewer than 2 other samples");
    }
    const auto positive = frame_refs(sample);
    if (positive.size() < 2) return std::nullopt;

    std::vector<std::vector<std::string>> shuffles;
    for (int s = 0; s < 2; ++s) {
        bool found = false;
        for (std::size_t attempt = 0; attempt < kItmShuffleRetries && !found; ++attempt) {
            auto shuffled = positive;
            rng.shuffle(shuffled.begin(), shuffled.end());
            if (shuffled != positive) {
                shuffles.push_back(std::move(shuffled));
                found = true;
            }
        }
        if (!found) return std::nullopt;
    }

    const std::size_t first = rng.uniform_index(others.size());
    std::size_t second = rng.uniform_index(others.size() - 1);
    if (second >= first) ++second;

    struct Entry {
        std::vector<std::string> frames;
        ItmCandidateKind kind;
    };
    std::vector<Entry> entries;
    entries.push_back({positive, ItmCandidateKind::kPositive});
    entries.push_back({frame_refs(*others[first]), ItmCandidateKind::kInBatch});
    entries.push_back({frame_refs(*others[second]), ItmCandidateKind::kInBatch});
    for (auto& s : shuffles) entries.push_back({std::move(s), ItmCandidateKind::kShuffled});
    rng.shuffle(entries.begin(), entries.end());

    ItmSample out;
    out.sample_id = sample.sample_id;
    out.instruction = sample.instruction;
    out.in_batch_sources[0] = others[first]->sample_id;
    out.in_batch_sources[1] = others[second]->sample_id;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].kind == ItmCandidateKind::kPositive) out.positive_index = i;
        out.kinds.push_back(entries[i].kind);
        out.candidates.push_back(std::move(entries[i].frames));
    }
    return out;
}

OrderedJson NapSample::to_json() const {
    OrderedJson j;
    j["sample_id"] = sample_id;
    j["step"] = step;
    j["instruction"] = instruction;
    j["history"] = string_array(history);
    j["next_action"] = std::string(to_string(next_action));
    return j;
}

std::vector<NapSample> build_nap(const VlnSample& sample) {
    if (sample.actions.empty()) fail(ErrorKind::kInvalidArgument, "sample " + sample.sample_id + " has no actions");
    const auto refs = frame_refs(sample);
    if (refs.size() < sample.actions.size() + 1) {
        fail(ErrorKind::kInvalidArgument, "sample " + sample.sample_id + " has fewer frames than actions + 1");
    }
    std::vector<NapSample> out;
    out.reserve(sample.actions.size() + 1);
    for (std::size_t t = 0; t <= sample.actions.size(); ++t) {
        NapSample n;
        n.sample_id = sample.sample_id;
        n.step = t;
        n.instruction = sample.instruction;
        n.history.assign(refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(t + 1));
        n.next_action = t < sample.actions.size() ? sample.actions[t] : TurnLabel::kStop;
        out.push_back(std::move(n));
    }
    return out;
}

void PretrainConfig::validate() const {
    mlm.validate();
    if (shard_size < 3) fail(ErrorKind::kInvalidArgument, "shard_size must be >= 3 to supply two in-batch negatives");
}

OrderedJson PretrainOutput::manifest(std::uint64_t seed, const PretrainConfig& cfg) const {
    OrderedJson j;
    j["seed"] = seed;
    j["input_samples"] = input_samples;
    j["shards"] = shards;
    j["shard_size"] = cfg.shard_size;
    j["mask_prob"] = cfg.mlm.mask_prob;
    j["replacement_mix"] = cfg.mlm.replacement_mix;
    j["counts"] = OrderedJson{{"mlm", mlm.size()}, {"itm", itm.size()}, {"nap", nap.size()}};
    j["skipped"] = string_array(skipped);
    return j;
}

namespace {

struct ShardOutput {
    std::vector<MlmSample> mlm;
    std::vector<ItmSample> itm;
    std::vector<NapSample> nap;
    std::vector<std::string> skipped;
};

ShardOutput build_shard(std::span<const VlnSample> shard, const PretrainConfig& cfg,
                        std::span<const std::string> vocabulary, std::uint64_t seed) {
    ShardOutput out;
    for (const auto& s : shard) {
        try {
            Rng rng(derive_seed(seed, "mlm/" + s.sample_id));
            out.mlm.push_back(build_mlm(s, cfg.mlm, vocabulary, rng));
        } catch (const Error& e) {
            out.skipped.push_back("mlm:" + s.sample_id + ": " + e.what());
        }
        try {
            Rng rng(derive_seed(seed, "itm/" + s.sample_id));
            if (auto itm = build_itm(s, shard, rng)) {
                out.itm.push_back(std::move(*itm));
            } else {
                out.skipped.push_back("itm:" + s.sample_id + ": trajectory cannot be reordered");
            }
        } catch (const Error& e) {
            out.skipped.push_back("itm:" + s.sample_id + ": " + e.what());
        }
        try {
            auto nap = build_nap(s);
            std::move(nap.begin(), nap.end(), std::back_inserter(out.nap));
        } catch (const Error& e) {
            out.skipped.push_back("nap:" + s.sample_id + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

PretrainOutput build_pretrain(std::span<const VlnSample> samples, const PretrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::vector<VlnSample> sorted(samples.begin(), samples.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const VlnSample& a, const VlnSample& b) { return a.sample_id < b.sample_id; });

    std::set<std::string> vocab_set;
    for (const auto& s : sorted) {
        for (auto& t : instruction_tokens(s.instruction)) vocab_set.insert(std::move(t));
    }
    const std::vector<std::string> vocabulary(vocab_set.begin(), vocab_set.end());

    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    for (std::size_t b = 0; b < sorted.size(); b += cfg.shard_size) {
        bounds.emplace_back(b, std::min(sorted.size(), b + cfg.shard_size));
    }
    if (bounds.size() > 1 && bounds.back().second - bounds.back().first < 3) {
        bounds[bounds.size() - 2].second = bounds.back().second;
        bounds.pop_back();
    }

    std::vector<ShardOutput> shard_out(bounds.size());
    const auto n = static_cast<std::ptrdiff_t>(bounds.size());
    const int workers = std::max(1, cfg.workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto [b, e] = bounds[i];
        shard_out[i] = build_shard(std::span(sorted).subspan(b, e - b), cfg, vocabulary, seed);
    }

    PretrainOutput out;
    out.input_samples = sorted.size();
    out.shards = bounds.size();
    for (auto& s : shard_out) {
        std::move(s.mlm.begin(), s.mlm.end(), std::back_inserter(out.mlm));
        std::move(s.itm.begin(), s.itm.end(), std::back_inserter(out.itm));
        std::move(s.nap.begin(), s.nap.end(), std::back_inserter(out.nap));
        std::move(s.skipped.begin(), s.skipped.end(), std::back_inserter(out.skipped));
    }
    for (const auto& s : out.skipped) spdlog::warn("skipped {}", s);
    return out;
}

}  // namespace vlnaug
