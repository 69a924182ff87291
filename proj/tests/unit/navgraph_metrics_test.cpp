#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "vlnaug/error.hpp"
#include "vlnaug/navgraph_metrics.hpp"
#include "vlnaug/rng.hpp"

using namespace vlnaug;
using vlnaug::testing::TempDir;

namespace {

constexpr auto F = TurnLabel::kForward;
constexpr auto L = TurnLabel::kLeft;
constexpr auto R = TurnLabel::kRight;
constexpr auto S = TurnLabel::kStop;

NavGraph path_graph(int n, std::vector<double> headings = {}) {
    NavGraph g;
    for (int i = 0; i < n; ++i) g.add_node(std::to_string(i), headings.empty() ? 0.0 : headings[i]);
    for (int i = 0; i + 1 < n; ++i) g.add_edge(std::to_string(i), std::to_string(i + 1));
    return g;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::kParse;
}

// Full-matrix textbook edit distance.
std::size_t lev_oracle(const Trajectory& a, const Trajectory& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
        }
    }
    return d[a.size()][b.size()];
}

Trajectory random_word(Rng& rng, std::size_t max_len) {
    Trajectory t;
    for (std::size_t i = 0, n = rng.uniform_index(max_len + 1); i < n; ++i) t.push_back(std::string(1, 'a' + rng.uniform_index(4)));
    return t;
}

}  // namespace

TEST(DeriveActions, BelowThresholdIsForward) {
    const auto g = path_graph(3, {10, 12, 15});
    EXPECT_EQ(derive_actions(g, Trajectory{"0", "1", "2"}), (std::vector<TurnLabel>{F, F, S}));
}

TEST(DeriveActions, WrapAround) {
    const auto g = path_graph(2, {350, 80});
    EXPECT_DOUBLE_EQ(wrap_heading_delta(350, 80), 90.0);
    EXPECT_EQ(derive_actions(g, Trajectory{"0", "1"}), (std::vector<TurnLabel>{R, S}));
    EXPECT_EQ(derive_actions(g, Trajectory{"1", "0"}), (std::vector<TurnLabel>{L, S}));
    const auto same = path_graph(2, {90, 90});
    EXPECT_EQ(derive_actions(same, Trajectory{"0", "1"}), (std::vector<TurnLabel>{F, S}));
}

TEST(DeriveActions, WrapDeltaRange) {
    EXPECT_DOUBLE_EQ(wrap_heading_delta(0, 180), 180.0);
    EXPECT_DOUBLE_EQ(wrap_heading_delta(180, 0), 180.0);
    EXPECT_DOUBLE_EQ(wrap_heading_delta(10, 350), -20.0);
}

TEST(DeriveActions, NonAdjacentIsInvalidTrajectory) {
    const auto g = path_graph(3);
    EXPECT_EQ(kind_of([&] { derive_actions(g, Trajectory{"0", "2"}); }), ErrorKind::kInvalidTrajectory);
    EXPECT_EQ(kind_of([&] { derive_actions(g, Trajectory{"0", "zz"}); }), ErrorKind::kInvalidTrajectory);
}

TEST(DeriveActions, PropertyGridRoundTripAndHeadingWrap) {
    // On a grid each node stores the heading of the move that reaches it, so
    // walking a random action sequence reproduces that sequence.
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        NavGraph g;
        int x = 0, y = 0, dir = 0;  // dir in quarter turns clockwise from north
        const int dx[] = {0, 1, 0, -1}, dy[] = {1, 0, -1, 0};
        std::vector<TurnLabel> actions;
        Trajectory walk;
        auto node = [&](int k) { return "n" + std::to_string(k); };
        g.add_node(node(0), 0.0);
        walk.push_back(node(0));
        for (int step = 1; step <= 20; ++step) {
            const auto a = static_cast<TurnLabel>(rng.uniform_index(3));
            if (a == L) dir = (dir + 3) % 4;
            if (a == R) dir = (dir + 1) % 4;
            x += dx[dir];
            y += dy[dir];
            // Fresh node per step so the walk never revisits a heading slot.
            g.add_node(node(step), 90.0 * dir);
            g.add_edge(node(step - 1), node(step));
            walk.push_back(node(step));
            actions.push_back(a);
        }
        actions.push_back(S);
        EXPECT_EQ(derive_actions(g, walk), actions);

        NavGraph shifted;
        for (const auto& id : g.node_ids()) {
            shifted.add_node(id, std::fmod(g.heading(id) + 360.0 * 3 + 359.0, 360.0));
        }
        for (std::size_t i = 1; i < walk.size(); ++i) shifted.add_edge(walk[i - 1], walk[i]);
        EXPECT_EQ(derive_actions(shifted, walk), actions);
    }
}

TEST(TaskCompletion, NeighbourRule) {
    const auto g = path_graph(5);
    EXPECT_EQ(task_completion(g, Trajectory{"0", "1", "2"}, "2"), 1);
    EXPECT_EQ(task_completion(g, Trajectory{"0", "1", "2"}, "3"), 1);
    EXPECT_EQ(task_completion(g, Trajectory{"0", "1", "2"}, "4"), 0);
    EXPECT_EQ(kind_of([&] { task_completion(g, Trajectory{}, "0"); }), ErrorKind::kInvalidArgument);
}

TEST(Spd, PathGraph) {
    const auto g = path_graph(5);
    EXPECT_EQ(shortest_path_distance(g, Trajectory{"0"}, "0"), 0.0);
    EXPECT_EQ(shortest_path_distance(g, Trajectory{"0"}, "4"), 4.0);
    EXPECT_EQ(shortest_path_distance(g, Trajectory{"3"}, "4"), 1.0);
}

TEST(Spd, DisconnectedIsUnreachable) {
    auto g = path_graph(3);
    g.add_node("island", 0);
    EXPECT_EQ(kind_of([&] { shortest_path_distance(g, Trajectory{"0"}, "island"); }), ErrorKind::kUnreachable);
}

TEST(Spd, WeightedUsesEdgeLengths) {
    NavGraph g;
    for (const char* n : {"a", "b", "c"}) g.add_node(n, 0);
    g.add_edge("a", "b", 5.0);
    g.add_edge("b", "c", 1.0);
    g.add_edge("a", "c", 10.0);
    EXPECT_EQ(shortest_path_distance(g, Trajectory{"a"}, "c"), 1.0);
    EXPECT_EQ(shortest_path_distance(g, Trajectory{"a"}, "c", true), 6.0);
}

TEST(Spd, PropertyMatchesFloydWarshall) {
    Rng rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(49));
        NavGraph g;
        for (int i = 0; i < n; ++i) g.add_node(std::to_string(i), 0);
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
        for (int i = 0; i < n; ++i) d[i][i] = 0;
        const double p = rng.uniform(0.02, 0.2);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (!rng.bernoulli(p)) continue;
                g.add_edge(std::to_string(i), std::to_string(j));
                d[i][j] = d[j][i] = 1;
            }
        }
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto got = g.shortest_distance(std::to_string(i), std::to_string(j));
                if (std::isinf(d[i][j])) {
                    ASSERT_FALSE(got.has_value());
                } else {
                    ASSERT_EQ(got, d[i][j]);
                }
            }
        }
    }
}

TEST(Levenshtein, PropertyMetricAndOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_word(rng, 12), b = random_word(rng, 12), c = random_word(rng, 12);
        const auto ab = levenshtein(a, b);
        ASSERT_EQ(ab, lev_oracle(a, b));
        ASSERT_EQ(ab, levenshtein(b, a));
        ASSERT_EQ(ab == 0, a == b);
        ASSERT_LE(levenshtein(a, c), ab + levenshtein(b, c));
    }
}

TEST(Sed, Examples) {
    const auto g = path_graph(12);
    Trajectory gold;
    for (int i = 0; i < 10; ++i) gold.push_back(std::to_string(i));
    EXPECT_EQ(success_weighted_edit_distance(g, gold, gold, "9"), 1.0);
    auto pred = gold;
    pred[4] = "x";  // substitution (not a valid walk, metrics do not require one)
    EXPECT_DOUBLE_EQ(success_weighted_edit_distance(g, pred, gold, "9"), 0.9);
    EXPECT_EQ(success_weighted_edit_distance(g, Trajectory{"0", "1"}, gold, "9"), 0.0);
}

TEST(Evaluate, InvariantsOnRandomWalks) {
    Rng rng(4);
    auto g = path_graph(20);
    for (int trial = 0; trial < 300; ++trial) {
        auto walk = [&] {
            Trajectory t{std::to_string(rng.uniform_index(20))};
            for (std::size_t i = 0, n = rng.uniform_index(10); i < n; ++i) {
                const auto nb = g.neighbors(t.back());
                t.push_back(nb[rng.uniform_index(nb.size())]);
            }
            return t;
        };
        const auto pred = walk(), gold = walk();
        const auto r = evaluate_trajectory(g, pred, gold, gold.back());
        if (r.tc == 0) ASSERT_EQ(r.sed, 0.0);
        if (r.spd == 0.0) ASSERT_EQ(r.tc, 1);
        ASSERT_GE(r.sed, 0.0);
        ASSERT_LE(r.sed, 1.0);
        ASSERT_EQ(r.sed == 1.0, pred == gold);
    }
}

TEST(Evaluate, InvalidTrajectoryRejected) {
    const auto g = path_graph(4);
    EXPECT_EQ(kind_of([&] { evaluate_trajectory(g, Trajectory{"0", "2"}, Trajectory{"0"}, "0"); }),
              ErrorKind::kInvalidTrajectory);
}

TEST(NavGraph, JsonLoadingAndValidation) {
    const auto doc = Json::parse(R"({"nodes":[{"id":1,"heading":0},{"id":"b","heading":359.5}],"edges":[[1,"b"]]})");
    const auto g = NavGraph::from_json(doc);
    EXPECT_TRUE(g.adjacent("1", "b"));
    EXPECT_THROW(NavGraph::from_json(Json::parse(R"({"nodes":[{"id":"a","heading":360}],"edges":[]})")), Error);
    EXPECT_THROW(NavGraph::from_json(Json::parse(R"({"nodes":[{"id":"a","heading":0}],"edges":[["a","a"]]})")), Error);
    EXPECT_THROW(NavGraph::from_json(Json::parse(R"({"nodes":[{"id":"a","heading":0}],"edges":[["a","q"]]})")), Error);
}

TEST(EvalBatch, MalformedRecordHasLineNumber) {
    TempDir dir("eval");
    const auto p = dir.write("b.jsonl", "{\"sample_id\":\"s\",\"predicted\":[\"0\"],\"gold\":[\"0\"],\"goal\":\"0\"}\n"
                                        "{\"sample_id\":\"t\",\"predicted\":\"0\"}\n");
    try {
        load_eval_batch(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
