#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vlnaug/error.hpp"
#include "vlnaug/pretrain_data.hpp"

using namespace vlnaug;

namespace {

VlnSample make_sample(const std::string& id, std::vector<TurnLabel> actions, std::string instruction) {
    VlnSample s;
    s.sample_id = id;
    s.video_id = id;
    for (std::size_t i = 0; i <= actions.size(); ++i) {
        s.frames.push_back({static_cast<long long>(i), id + "/f" + std::to_string(i) + ".png", static_cast<double>(i)});
    }
    s.actions = std::move(actions);
    s.segments = merge_actions(s.actions);
    s.instruction = std::move(instruction);
    return s;
}

std::vector<VlnSample> random_samples(Rng& rng, std::size_t n) {
    std::vector<VlnSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<TurnLabel> acts;
        for (std::size_t k = 0, m = 1 + rng.uniform_index(8); k < m; ++k) acts.push_back(static_cast<TurnLabel>(rng.uniform_index(3)));
        out.push_back(make_sample("s" + std::to_string(1000 + i), acts, "go forward past the bench . turn left . stop ."));
    }
    return out;
}

std::string dump_all(const PretrainOutput& out) {
    std::string s;
    for (const auto& m : out.mlm) s += m.to_json().dump() + "\n";
    for (const auto& m : out.itm) s += m.to_json().dump() + "\n";
    for (const auto& m : out.nap) s += m.to_json().dump() + "\n";
    return s;
}

}  // namespace

TEST(Mlm, FullMaskingWithoutMix) {
    const auto s = make_sample("a", {TurnLabel::kForward}, "turn left at the bench .");
    MlmConfig cfg;
    cfg.mask_prob = 1.0;
    cfg.replacement_mix = false;
    Rng rng(1);
    const auto m = build_mlm(s, cfg, {}, rng);
    EXPECT_EQ(m.masked_positions.size(), 6u);
    for (const auto& t : m.tokens) EXPECT_EQ(t, kMaskToken);
    EXPECT_EQ(m.targets, instruction_tokens(s.instruction));
}

TEST(Mlm, EmptyInstructionRejected) {
    const auto s = make_sample("a", {TurnLabel::kForward}, "  ");
    Rng rng(1);
    EXPECT_THROW(build_mlm(s, {}, {}, rng), Error);
}

TEST(Mlm, PropertyUnmaskReconstructsAndAtLeastOneMask) {
    Rng rng(2);
    const std::vector<std::string> vocab{"alpha", "beta", "gamma"};
    for (int trial = 0; trial < 500; ++trial) {
        const auto s = make_sample("a", {TurnLabel::kLeft}, "turn left . go forward past the red awning . stop .");
        const auto m = build_mlm(s, {}, vocab, rng);
        ASSERT_FALSE(m.masked_positions.empty());
        ASSERT_EQ(m.masked_positions.size(), m.targets.size());
        ASSERT_TRUE(std::is_sorted(m.masked_positions.begin(), m.masked_positions.end()));
        ASSERT_EQ(m.unmasked(), instruction_tokens(s.instruction));
        for (std::size_t i = 0; i < m.tokens.size(); ++i) {
            const bool masked = std::binary_search(m.masked_positions.begin(), m.masked_positions.end(), i);
            if (!masked) ASSERT_EQ(m.tokens[i], instruction_tokens(s.instruction)[i]);
        }
    }
}

TEST(Mlm, MaskRateLaw) {
    // A long instruction keeps the at-least-one redraw negligible
    // (P(no mask) = 0.85^200 ~ 1e-14).
    std::string text;
    for (int i = 0; i < 200; ++i) text += "w" + std::to_string(i % 17) + " ";
    const auto s = make_sample("a", {TurnLabel::kForward}, text);
    Rng rng(3);
    std::size_t masked = 0, total = 0;
    std::array<std::size_t, 3> kinds{};  // mask, random, kept
    const std::vector<std::string> vocab{"zz"};
    for (int t = 0; t < 2000; ++t) {
        const auto m = build_mlm(s, {}, vocab, rng);
        masked += m.masked_positions.size();
        total += m.tokens.size();
        for (auto p : m.masked_positions) {
            if (m.tokens[p] == kMaskToken) ++kinds[0];
            else if (m.tokens[p] == "zz") ++kinds[1];
            else ++kinds[2];
        }
    }
    EXPECT_NEAR(static_cast<double>(masked) / total, 0.15, 0.003);
    EXPECT_NEAR(static_cast<double>(kinds[0]) / masked, 0.8, 0.01);
    EXPECT_NEAR(static_cast<double>(kinds[1]) / masked, 0.1, 0.01);
}

TEST(Itm, ShufflesAreOrderChangingPermutations) {
    Rng rng(4);
    const auto pos = make_sample("p", {TurnLabel::kForward, TurnLabel::kLeft}, "turn left . stop .");
    const std::vector<VlnSample> pool{pos, make_sample("q", {TurnLabel::kForward}, "stop ."),
                                      make_sample("r", {TurnLabel::kRight}, "turn right . stop .")};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto itm = build_itm(pos, pool, rng);
        ASSERT_TRUE(itm);
        ASSERT_EQ(itm->candidates.size(), 5u);
        ASSERT_EQ(std::count(itm->kinds.begin(), itm->kinds.end(), ItmCandidateKind::kPositive), 1);
        ASSERT_EQ(itm->kinds[itm->positive_index], ItmCandidateKind::kPositive);
        const auto original = frame_refs(pos);
        ASSERT_EQ(itm->candidates[itm->positive_index], original);
        auto sorted_original = original;
        std::sort(sorted_original.begin(), sorted_original.end());
        std::set<std::string> sources(itm->in_batch_sources.begin(), itm->in_batch_sources.end());
        ASSERT_EQ(sources, (std::set<std::string>{"q", "r"}));
        int shuffled = 0, in_batch = 0;
        for (std::size_t i = 0; i < 5; ++i) {
            if (itm->kinds[i] == ItmCandidateKind::kShuffled) {
                ++shuffled;
                auto c = itm->candidates[i];
                ASSERT_NE(c, original);
                std::sort(c.begin(), c.end());
                ASSERT_EQ(c, sorted_original);
            } else if (itm->kinds[i] == ItmCandidateKind::kInBatch) {
                ++in_batch;
            }
        }
        ASSERT_EQ(shuffled, 2);
        ASSERT_EQ(in_batch, 2);
    }
}

TEST(Itm, SkipsSingleFrameAndRejectsSmallPool) {
    Rng rng(5);
    VlnSample one = make_sample("p", {}, "stop .");
    const std::vector<VlnSample> pool{make_sample("q", {TurnLabel::kForward}, "stop ."),
                                      make_sample("r", {TurnLabel::kForward}, "stop .")};
    EXPECT_FALSE(build_itm(one, pool, rng).has_value());
    const auto p = make_sample("p", {TurnLabel::kForward}, "stop .");
    const std::vector<VlnSample> small{p, pool[0]};
    EXPECT_THROW(build_itm(p, small, rng), Error);
}

TEST(Nap, Examples) {
    const auto s = make_sample("a", {TurnLabel::kForward, TurnLabel::kLeft}, "x .");
    const auto nap = build_nap(s);
    ASSERT_EQ(nap.size(), 3u);
    EXPECT_EQ(nap[0].next_action, TurnLabel::kForward);
    EXPECT_EQ(nap[1].next_action, TurnLabel::kLeft);
    EXPECT_EQ(nap[2].next_action, TurnLabel::kStop);
    EXPECT_EQ(nap[1].history, (std::vector<std::string>{"a/f0.png", "a/f1.png"}));
    EXPECT_EQ(build_nap(make_sample("b", {TurnLabel::kRight}, "x .")).size(), 2u);
    EXPECT_THROW(build_nap(make_sample("c", {}, "x .")), Error);
}

TEST(BuildPretrain, CountsAndDeterminism) {
    Rng rng(6);
    const auto samples = random_samples(rng, 150);
    PretrainConfig cfg;
    const auto a = build_pretrain(samples, cfg, 99);
    std::size_t nap = 0;
    for (const auto& s : samples) nap += s.actions.size() + 1;
    EXPECT_EQ(a.nap.size(), nap);
    EXPECT_EQ(a.mlm.size(), samples.size());
    EXPECT_EQ(a.itm.size() + a.skipped.size(), samples.size());
    EXPECT_EQ(a.shards, 3u);  // 64 + 64 + 22
    cfg.workers = 3;
    const auto b = build_pretrain(samples, cfg, 99);
    EXPECT_EQ(dump_all(a), dump_all(b));
    // Input order does not matter either.
    auto reversed = samples;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_EQ(dump_all(a), dump_all(build_pretrain(reversed, PretrainConfig{}, 99)));
}

TEST(BuildPretrain, InBatchNegativesStayInShard) {
    Rng rng(7);
    const auto samples = random_samples(rng, 20);
    PretrainConfig cfg;
    cfg.shard_size = 5;
    const auto out = build_pretrain(samples, cfg, 1);
    EXPECT_EQ(out.shards, 4u);
    for (const auto& itm : out.itm) {
        const auto shard_of = [](const std::string& id) { return (std::stoi(id.substr(1)) - 1000) / 5; };
        for (const auto& src : itm.in_batch_sources) {
            EXPECT_EQ(shard_of(src), shard_of(itm.sample_id));
            EXPECT_NE(src, itm.sample_id);
        }
    }
}

TEST(BuildPretrain, EmptyInput) {
    const auto out = build_pretrain({}, {}, 1);
    EXPECT_TRUE(out.mlm.empty() && out.itm.empty() && out.nap.empty());
}
