#include "vlnaug/navgraph_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "vlnaug/error.hpp"

namespace vlnaug {

void NavGraph::add_node(const NodeId& id, double heading_deg) {
    if (!std::isfinite(heading_deg) || heading_deg < 0.0 || heading_deg >= 360.0) {
        fail(ErrorKind::kInvalidArgument, "node " + id + ": heading must be in [0, 360)");
    }
    if (!index_.emplace(id, ids_.size()).second) fail(ErrorKind::kInvalidArgument, "duplicate node " + id);
    ids_.push_back(id);
    headings_.push_back(heading_deg);
    adjacency_.emplace_back();
}

void NavGraph::add_edge(const NodeId& a, const NodeId& b, double length) {
    if (a == b) fail(ErrorKind::kInvalidArgument, "self-loop on node " + a);
    if (!(length > 0.0) || !std::isfinite(length)) fail(ErrorKind::kInvalidArgument, "edge length must be > 0");
    const auto ia = index_of(a);
    const auto ib = index_of(b);
    if (adjacent(a, b)) return;
    adjacency_[ia].push_back({ib, length});
    adjacency_[ib].push_back({ia, length});
}

std::size_t NavGraph::index_of(const NodeId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorKind::kInvalidArgument, "unknown node " + id);
    return it->second;
}

bool NavGraph::adjacent(const NodeId& a, const NodeId& b) const {
    const auto ia = index_of(a);
    const auto ib = index_of(b);
    const auto& adj = adjacency_[ia];
    return std::any_of(adj.begin(), adj.end(), [ib](const Edge& e) { return e.to == ib; });
}

double NavGraph::heading(const NodeId& id) const { return headings_[index_of(id)]; }

std::vector<NodeId> NavGraph::neighbors(const NodeId& id) const {
    std::vector<NodeId> out;
    for (const auto& e : adjacency_[index_of(id)]) out.push_back(ids_[e.to]);
    return out;
}

std::optional<double> NavGraph::shortest_distance(const NodeId& from, const NodeId& to, bool weighted) const {
    const auto src = index_of(from);
    const auto dst = index_of(to);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(ids_.size(), inf);
    dist[src] = 0.0;
    if (!weighted) {
        std::deque<std::size_t> queue{src};
        while (!queue.empty()) {
            const auto u = queue.front();
            queue.pop_front();
            if (u == dst) break;
            for (const auto& e : adjacency_[u]) {
                if (dist[e.to] == inf) {
                    dist[e.to] = dist[u] + 1.0;
                    queue.push_back(e.to);
                }
            }
        }
    } else {
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        heap.push({0.0, src});
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d > dist[u]) continue;
            if (u == dst) break;
            for (const auto& e : adjacency_[u]) {
                if (d + e.length < dist[e.to]) {
                    dist[e.to] = d + e.length;
                    heap.push({dist[e.to], e.to});
                }
            }
        }
    }
    if (dist[dst] == inf) return std::nullopt;
    return dist[dst];
}

namespace {

NodeId node_id_from_json(const Json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

NavGraph NavGraph::from_json(const Json& doc) {
    NavGraph g;
    try {
        for (const auto& n : doc.at("nodes")) {
            double h = n.at("heading").get<double>();
            g.add_node(node_id_from_json(n.at("id")), h);
        }
        for (const auto& e : doc.at("edges")) {
            if (!e.is_array() || e.size() < 2 || e.size() > 3) fail(ErrorKind::kParse, "edge must be [a, b] or [a, b, length]");
            g.add_edge(node_id_from_json(e.at(0)), node_id_from_json(e.at(1)),
                       e.size() == 3 ? e.at(2).get<double>() : 1.0);
        }
    } catch (const Json::exception& ex) {
        fail(ErrorKind::kParse, std::string("malformed graph: ") + ex.what());
    }
    return g;
}

NavGraph NavGraph::load(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

void validate_trajectory(const NavGraph& graph, std::span<const NodeId> trajectory) {
    if (trajectory.empty()) fail(ErrorKind::kInvalidTrajectory, "trajectory is empty");
    for (const auto& id : trajectory) {
        if (!graph.has_node(id)) fail(ErrorKind::kInvalidTrajectory, "trajectory visits unknown node " + id);
    }
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        if (!graph.adjacent(trajectory[i - 1], trajectory[i])) {
            fail(ErrorKind::kInvalidTrajectory,
                 "nodes " + trajectory[i - 1] + " and " + trajectory[i] + " are not adjacent");
        }
    }
}

double wrap_heading_delta(double from_deg, double to_deg) {
    double d = std::fmod(to_deg - from_deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

std::vector<TurnLabel> derive_actions(const NavGraph& graph, std::span<const NodeId> trajectory,
                                      double fwd_threshold_deg) {
    validate_trajectory(graph, trajectory);
    std::vector<TurnLabel> out;
    out.reserve(trajectory.size());
    for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
        const double d = wrap_heading_delta(graph.heading(trajectory[i]), graph.heading(trajectory[i + 1]));
        if (std::abs(d) < fwd_threshold_deg) {
            out.push_back(TurnLabel::kForward);
        } else {
            out.push_back(d > 0.0 ? TurnLabel::kRight : TurnLabel::kLeft);
        }
    }
    out.push_back(TurnLabel::kStop);
    return out;
}

int task_completion(const NavGraph& graph, std::span<const NodeId> predicted, const NodeId& goal) {
    if (predicted.empty()) fail(ErrorKind::kInvalidArgument, "task_completion: empty trajectory");
    if (!graph.has_node(goal)) fail(ErrorKind::kInvalidArgument, "unknown goal node " + goal);
    const auto& last = predicted.back();
    return (last == goal || graph.adjacent(last, goal)) ? 1 : 0;
}

double shortest_path_distance(const NavGraph& graph, std::span<const NodeId> predicted, const NodeId& goal,
                              bool weighted) {
    if (predicted.empty()) fail(ErrorKind::kInvalidArgument, "shortest_path_distance: empty trajectory");
    const auto d = graph.shortest_distance(predicted.back(), goal, weighted);
    if (!d) fail(ErrorKind::kUnreachable, "goal " + goal + " unreachable from " + predicted.back());
    return *d;
}

std::size_t levenshtein(std::span<const NodeId> a, std::span<const NodeId> b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double success_weighted_edit_distance(const NavGraph& graph, std::span<const NodeId> predicted,
                                      std::span<const NodeId> gold, const NodeId& goal) {
    const int tc = task_completion(graph, predicted, goal);
    if (tc == 0) return 0.0;
    const auto longest = std::max(predicted.size(), gold.size());
    const double ratio = static_cast<double>(levenshtein(predicted, gold)) / static_cast<double>(longest);
    return std::clamp(1.0 - ratio, 0.0, 1.0);
}

EvalResult evaluate_trajectory(const NavGraph& graph, std::span<const NodeId> predicted,
                               std::span<const NodeId> gold, const NodeId& goal, bool weighted) {
    validate_trajectory(graph, predicted);
    validate_trajectory(graph, gold);
    EvalResult r;
    r.tc = task_completion(graph, predicted, goal);
    r.spd = shortest_path_distance(graph, predicted, goal, weighted);
    r.sed = success_weighted_edit_distance(graph, predicted, gold, goal);
    return r;
}

std::vector<EvalRecord> load_eval_batch(const std::filesystem::path& path) {
    std::vector<EvalRecord> out;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        EvalRecord r;
        r.line = line;
        r.sample_id = node_id_from_json(rec.at("sample_id"));
        for (const auto& n : rec.at("predicted")) r.predicted.push_back(node_id_from_json(n));
        for (const auto& n : rec.at("gold")) r.gold.push_back(node_id_from_json(n));
        r.goal = node_id_from_json(rec.at("goal"));
        out.push_back(std::move(r));
    });
    return out;
}

}  // namespace vlnaug
