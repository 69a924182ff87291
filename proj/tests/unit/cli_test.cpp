#include <gtest/gtest.h>

#include <sstream>

#include "clip_fixture.hpp"
#include "test_util.hpp"
#include "vlnaug/cli.hpp"
#include "vlnaug/jsonl.hpp"

using namespace vlnaug;
using vlnaug::testing::fixture;
using vlnaug::testing::TempDir;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vlnaug");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<Json> read_jsonl(const std::filesystem::path& p) {
    std::vector<Json> out;
    for_each_jsonl(p, [&](const Json& j, std::size_t) { out.push_back(j); });
    return out;
}

std::string slurp(const std::filesystem::path& p) { return read_text_file(p); }

}  // namespace

TEST(CliExtract, FixtureCountsMatchOracle) {
    TempDir dir("cli");
    const auto r = run_cli({"extract-templates", "--corpus", fixture("templates/corpus.jsonl"), "--annotations",
                            fixture("templates/annotations.jsonl"), "--scores", fixture("templates/scores.jsonl"),
                            "--out", dir.path()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("TURN_LEFT candidates 5 retained 3"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("TURN_RIGHT candidates 6 retained 3"), std::string::npos);
    EXPECT_NE(r.out.find("FORWARD candidates 6 retained 3"), std::string::npos);
    EXPECT_NE(r.out.find("STOP candidates 4 retained 2"), std::string::npos);
    const auto bank = TemplateBank::load(dir / "bank.json");
    EXPECT_EQ(bank.size(), 11u);
    EXPECT_EQ(bank.metadata.corpus_id, "corpus");
}

TEST(CliExtract, KeepAllWithoutScorerKeepsEveryCandidate) {
    TempDir dir("cli");
    const auto r = run_cli({"extract-templates", "--corpus", fixture("templates/corpus.jsonl"), "--annotations",
                            fixture("templates/annotations.jsonl"), "--keep-fraction", "1", "--out", dir.path()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("STOP candidates 4 retained 4"), std::string::npos) << r.out;
    EXPECT_EQ(TemplateBank::load(dir / "bank.json").size(), 21u);
}

TEST(CliExtract, InputErrorsExitTwo) {
    TempDir dir("cli");
    auto r = run_cli({"extract-templates", "--corpus", fixture("templates/corpus.jsonl"), "--annotations",
                      (dir / "missing.jsonl").string(), "--keep-fraction", "1", "--out", dir.path()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("missing.jsonl"), std::string::npos);
    // Halving without any scorer is a configuration error.
    r = run_cli({"extract-templates", "--corpus", fixture("templates/corpus.jsonl"), "--annotations",
                 fixture("templates/annotations.jsonl"), "--out", dir.path()});
    EXPECT_EQ(r.code, 2);
    r = run_cli({"extract-templates", "--keep-fraction", "1.5"});
    EXPECT_EQ(r.code, 2);
    r = run_cli({"no-such-command"});
    EXPECT_EQ(r.code, 2);
}

TEST(CliConfig, FileSettingsAndFlagOverrides) {
    TempDir dir("cli");
    const auto cfg = dir.write("run.cfg", "# fixture run\ncorpus = " + fixture("templates/corpus.jsonl").string() +
                                              "\nannotations = " + fixture("templates/annotations.jsonl").string() +
                                              "\nscores = " + fixture("templates/scores.jsonl").string() +
                                              "\nkeep_fraction = 0.5\nout = " + dir.path().string() + "\n");
    auto r = run_cli({"extract-templates", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(TemplateBank::load(dir / "bank.json").size(), 11u);
    r = run_cli({"extract-templates", "--config", cfg.string(), "--keep-fraction", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(TemplateBank::load(dir / "bank.json").size(), 20u);  // the NaN-scored template is still dropped

    const auto bad = dir.write("bad.cfg", "seed = 3\nwindow_size = 9\n");
    r = run_cli({"evaluate", "--config", bad.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.cfg:2"), std::string::npos) << r.err;
}

TEST(CliPredict, SyntheticPanLabels) {
    TempDir dir("cli");
    const auto files = vlnaug::testing::write_clip_set(dir.path(), {{"p1", 12}, {"p2", 9}}, 21);
    const auto r = run_cli({"predict-actions", "--clips", files.manifest.string(), "--out", (dir / "o").string(),
                            "--workers", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto recs = read_jsonl(dir / "o/actions.jsonl");
    ASSERT_EQ(recs.size(), 3u * (11 + 8));
    std::size_t i = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        for (const auto truth : files.truth[c]) {
            for (const char* cand : {"LEFT_ROTATED", "UNCHANGED", "RIGHT_ROTATED"}) {
                const auto& rec = recs[i++];
                EXPECT_EQ(rec["candidate"], cand);
                EXPECT_EQ(rec["label"], std::string(to_string(truth)));
                EXPECT_EQ(rec["window_scores"].size(), 3u);
            }
        }
    }
}

TEST(CliPredict, EmptyManifestAndCorruptImage) {
    TempDir dir("cli");
    const auto empty = dir.write("empty.jsonl", "");
    auto r = run_cli({"predict-actions", "--clips", empty.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "o/actions.jsonl"), "");

    const auto files = vlnaug::testing::write_clip_set(dir.path(), {{"good", 4}, {"bad", 4}}, 3);
    write_text_file(dir / "bad/f001.png", "garbage");
    r = run_cli({"predict-actions", "--clips", files.manifest.string(), "--out", (dir / "o2").string()});
    EXPECT_EQ(r.code, 1);
    const auto report = read_json_file(dir / "o2/predict_report.json");
    ASSERT_EQ(report["failures"].size(), 1u);
    EXPECT_EQ(report["failures"][0]["video_id"], "bad");
    EXPECT_EQ(read_jsonl(dir / "o2/actions.jsonl").size(), 9u);
}

TEST(CliGenerate, DeterministicAndAccounted) {
    TempDir dir("cli");
    const auto files = vlnaug::testing::write_clip_set(dir.path(), {{"g1", 36}, {"g2", 1}, {"g3", 41}}, 5);
    const std::vector<std::string> base{"generate",  "--clips",  files.manifest.string(), "--bank",
                                        fixture("bank.json").string(), "--detections", files.detections.string(),
                                        "--blocklist", fixture("blocklist.txt").string(), "--seed", "17"};
    auto args = base;
    args.insert(args.end(), {"--out", (dir / "a").string()});
    auto r = run_cli(args);
    EXPECT_EQ(r.code, 1) << r.err;  // g2 has a single frame
    args = base;
    args.insert(args.end(), {"--out", (dir / "b").string(), "--workers", "3"});
    EXPECT_EQ(run_cli(args).code, 1);
    EXPECT_EQ(slurp(dir / "a/samples.jsonl"), slurp(dir / "b/samples.jsonl"));
    EXPECT_EQ(slurp(dir / "a/report.json"), slurp(dir / "b/report.json"));
    const auto report = read_json_file(dir / "a/report.json");
    EXPECT_EQ(report["clips_in"].get<int>(), report["samples_out"].get<int>() + report["rejected"].get<int>());
    EXPECT_EQ(report["samples_out"], 2);

    const auto none = dir.write("none.jsonl", "");
    r = run_cli({"generate", "--clips", none.string(), "--bank", fixture("bank.json").string(), "--out",
                 (dir / "c").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "c/samples.jsonl"), "");
}

TEST(CliPretrain, CountsEmptyAndByteEquality) {
    TempDir dir("cli");
    const auto files = vlnaug::testing::write_clip_set(dir.path(), {{"a", 30}, {"b", 33}, {"c", 27}, {"d", 40}}, 8);
    ASSERT_EQ(run_cli({"generate", "--clips", files.manifest.string(), "--bank", fixture("bank.json").string(),
                       "--detections", files.detections.string(), "--out", (dir / "gen").string()})
                  .code,
              0);
    const auto samples = read_jsonl(dir / "gen/samples.jsonl");
    std::size_t expect_nap = 0;
    for (const auto& s : samples) expect_nap += s["actions"].size() + 1;
    for (const char* sub : {"p1", "p2"}) {
        const auto r = run_cli({"build-pretrain", "--samples", (dir / "gen/samples.jsonl").string(), "--seed", "4",
                                "--out", (dir / sub).string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(read_jsonl(dir / "p1/nap.jsonl").size(), expect_nap);
    EXPECT_EQ(read_jsonl(dir / "p1/itm.jsonl").size(), samples.size());
    for (const char* f : {"mlm.jsonl", "itm.jsonl", "nap.jsonl", "pretrain_manifest.json"}) {
        EXPECT_EQ(slurp(dir / "p1" / f), slurp(dir / "p2" / f)) << f;
    }
    const auto manifest = read_json_file(dir / "p1/pretrain_manifest.json");
    EXPECT_EQ(manifest["seed"], 4);

    const auto empty = dir.write("empty.jsonl", "");
    const auto r = run_cli({"build-pretrain", "--samples", empty.string(), "--out", (dir / "e").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    for (const char* f : {"mlm.jsonl", "itm.jsonl", "nap.jsonl"}) EXPECT_EQ(slurp(dir / "e" / f), "");
}

TEST(CliEvaluate, IdenticalBatchAndPathFixture) {
    TempDir dir("cli");
    const auto graph = fixture("graph_path5.json");
    auto batch = dir.write("same.jsonl",
                           "{\"sample_id\":\"a\",\"predicted\":[\"n0\",\"n1\"],\"gold\":[\"n0\",\"n1\"],\"goal\":\"n1\"}\n"
                           "{\"sample_id\":\"b\",\"predicted\":[\"n4\"],\"gold\":[\"n4\"],\"goal\":\"n4\"}\n");
    auto r = run_cli({"evaluate", "--graph", graph.string(), "--batch", batch.string(), "--out", (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto summary = read_json_file(dir / "o/metrics_summary.json");
    EXPECT_EQ(summary["tc"], 1.0);
    EXPECT_EQ(summary["spd"], 0.0);
    EXPECT_EQ(summary["sed"], 1.0);

    r = run_cli({"evaluate", "--graph", graph.string(), "--batch", fixture("batch_path5.jsonl").string(), "--out",
                 (dir / "p").string(), "--derive-actions"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto metrics = read_jsonl(dir / "p/metrics.jsonl");
    // Oracles on the 5-node path n0-n1-n2-n3-n4 (see the fixture).
    ASSERT_EQ(metrics.size(), 3u);
    EXPECT_EQ(metrics[0]["tc"], 0);
    EXPECT_EQ(metrics[0]["spd"], 4.0);
    EXPECT_EQ(metrics[0]["sed"], 0.0);
    EXPECT_EQ(metrics[1]["tc"], 1);
    EXPECT_EQ(metrics[1]["spd"], 1.0);
    EXPECT_DOUBLE_EQ(metrics[1]["sed"].get<double>(), 1.0 - 1.0 / 5.0);
    EXPECT_EQ(metrics[2]["tc"], 1);
    EXPECT_EQ(metrics[2]["spd"], 0.0);
    EXPECT_DOUBLE_EQ(metrics[2]["sed"].get<double>(), 1.0 - 2.0 / 5.0);
    const auto gold = read_jsonl(dir / "p/gold_actions.jsonl");
    EXPECT_EQ(gold[0]["actions"], Json::parse(R"(["FORWARD","RIGHT","FORWARD","LEFT","STOP"])"));
}

TEST(CliEvaluate, MalformedRecordExitTwoWithLine) {
    TempDir dir("cli");
    const auto batch = dir.write("bad.jsonl",
                                 "{\"sample_id\":\"a\",\"predicted\":[\"n0\"],\"gold\":[\"n0\"],\"goal\":\"n0\"}\n"
                                 "{\"sample_id\":\"b\",\"predicted\":[\"n0\",\"n3\"],\"gold\":[\"n0\"],\"goal\":\"n0\"}\n");
    const auto r = run_cli({"evaluate", "--graph", fixture("graph_path5.json").string(), "--batch", batch.string(),
                            "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.jsonl:2"), std::string::npos) << r.err;
    const auto garbage = dir.write("garbage.jsonl", "\n{\"sample_id\":\n");
    const auto r2 = run_cli({"evaluate", "--graph", fixture("graph_path5.json").string(), "--batch",
                             garbage.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r2.code, 2);
    EXPECT_NE(r2.err.find("garbage.jsonl:2"), std::string::npos) << r2.err;
}
