#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlnaug/jsonl.hpp"
#include "vlnaug/turn_label.hpp"

namespace vlnaug {

using NodeId = std::string;
using Trajectory = std::vector<NodeId>;

/// Undirected panorama graph. Node ids are strings; numeric ids in input files
/// are converted with their JSON text.
class NavGraph {
public:
    /// Throws Error(kInvalidArgument) on a duplicate id or a heading outside [0, 360).
    void add_node(const NodeId& id, double heading_deg);
    /// Throws Error(kInvalidArgument) for unknown endpoints or self-loops.
    /// length is only used by weighted shortest paths.
    void add_edge(const NodeId& a, const NodeId& b, double length = 1.0);

    [[nodiscard]] bool has_node(const NodeId& id) const { return index_.count(id) != 0; }
    [[nodiscard]] bool adjacent(const NodeId& a, const NodeId& b) const;
    [[nodiscard]] double heading(const NodeId& id) const;
    [[nodiscard]] std::size_t node_count() const { return ids_.size(); }
    [[nodiscard]] const std::vector<NodeId>& node_ids() const { return ids_; }
    [[nodiscard]] std::vector<NodeId> neighbors(const NodeId& id) const;

    /// Hop count, or edge-length sum when weighted. nullopt if unreachable.
    [[nodiscard]] std::optional<double> shortest_distance(const NodeId& from, const NodeId& to,
                                                          bool weighted = false) const;

    /// {nodes:[{id, heading}], edges:[[a, b] or [a, b, length]]}.
    static NavGraph from_json(const Json& doc);
    static NavGraph load(const std::filesystem::path& path);

private:
    [[nodiscard]] std::size_t index_of(const NodeId& id) const;

    struct Edge {
        std::size_t to;
        double length;
    };
    std::vector<NodeId> ids_;
    std::vector<double> headings_;
    std::vector<std::vector<Edge>> adjacency_;
    std::unordered_map<NodeId, std::size_t> index_;
};

/// Throws Error(kInvalidTrajectory) if empty, off-graph, or a consecutive pair
/// is not adjacent.
void validate_trajectory(const NavGraph& graph, std::span<const NodeId> trajectory);

/// Heading change wrapped into (-180, 180]; positive is clockwise.
double wrap_heading_delta(double from_deg, double to_deg);

/// Per step: |delta| < threshold is FORWARD, positive delta RIGHT, negative
/// LEFT; a final STOP is appended, so the result has the trajectory's length.
std::vector<TurnLabel> derive_actions(const NavGraph& graph, std::span<const NodeId> trajectory,
                                      double fwd_threshold_deg = 45.0);

/// 1 if the final node is the goal or one of its neighbours.
int task_completion(const NavGraph& graph, std::span<const NodeId> predicted, const NodeId& goal);

/// Shortest distance from the final node to the goal. Throws
/// Error(kUnreachable) when they are disconnected.
double shortest_path_distance(const NavGraph& graph, std::span<const NodeId> predicted, const NodeId& goal,
                              bool weighted = false);

/// Edit distance over node ids (unit insert/delete/substitute).
std::size_t levenshtein(std::span<const NodeId> a, std::span<const NodeId> b);

/// TC * (1 - lev(predicted, gold) / max(|predicted|, |gold|)), clamped to [0, 1].
double success_weighted_edit_distance(const NavGraph& graph, std::span<const NodeId> predicted,
                                      std::span<const NodeId> gold, const NodeId& goal);

struct EvalResult {
    int tc = 0;
    double spd = 0.0;
    double sed = 0.0;
};

/// Validates both trajectories and computes all three metrics.
EvalResult evaluate_trajectory(const NavGraph& graph, std::span<const NodeId> predicted,
                               std::span<const NodeId> gold, const NodeId& goal, bool weighted = false);

struct EvalRecord {
    std::string sample_id;
    Trajectory predicted;
    Trajectory gold;
    NodeId goal;
    std::size_t line = 0;
};

/// Batch JSONL {sample_id, predicted[], gold[], goal}.
std::vector<EvalRecord> load_eval_batch(const std::filesystem::path& path);

}  // namespace vlnaug
