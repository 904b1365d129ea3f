#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnim::graph {

using NodeId = std::uint32_t;
using Timestamp = std::int64_t;  // Unix seconds

struct TemporalEdge {
    NodeId src;
    NodeId dst;
    Timestamp timestamp;

    friend bool operator==(const TemporalEdge&, const TemporalEdge&) = default;
};

struct Neighbor {
    NodeId node;
    Timestamp timestamp;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

enum class WeightColumn { automatic, present, absent };

struct ParseOptions {
    char delimiter = '\0';  // '\0': comma if the line has one, else whitespace
    WeightColumn weight = WeightColumn::automatic;
    bool drop_loops = false;
    bool dedup = false;
};

// Immutable continuous-time edge stream over dense node ids [0, n_nodes).
//
// Edges are kept sorted by timestamp (stable with respect to construction
// order). The undirected incidence index used by the embedding module is
// built once at construction.
class TemporalGraph {
public:
    // `original_ids` may be empty, in which case ids are their own originals.
    // When a window is given, edges outside [t_start, t_end] are dropped.
    TemporalGraph(std::size_t n_nodes, std::vector<TemporalEdge> edges,
                  std::vector<std::int64_t> original_ids = {},
                  std::optional<Timestamp> t_start = std::nullopt,
                  std::optional<Timestamp> t_end = std::nullopt);

    std::size_t n_nodes() const noexcept { return n_nodes_; }
    std::size_t n_edges() const noexcept { return edges_.size(); }
    std::span<const TemporalEdge> edges() const noexcept { return edges_; }
    Timestamp t_start() const noexcept { return t_start_; }
    Timestamp t_end() const noexcept { return t_end_; }
    Timestamp duration() const noexcept { return t_end_ - t_start_; }
    double density() const noexcept { return static_cast<double>(edges_.size()) / static_cast<double>(n_nodes_); }

    std::int64_t original_id(NodeId v) const;
    std::span<const std::int64_t> original_ids() const noexcept { return original_ids_; }
    std::optional<NodeId> find_original(std::int64_t original) const;

    // Every (u, t) with an edge (v,u,t) or (u,v,t), ascending by t; one entry
    // per edge. Throws on an out-of-range id.
    std::span<const Neighbor> temporal_neighbors(NodeId v) const;

    std::vector<std::size_t> out_degrees() const;

    // Copy restricted to [t_start, t_end]; node set and ids unchanged.
    TemporalGraph with_window(std::optional<Timestamp> t_start, std::optional<Timestamp> t_end) const;

private:
    std::size_t n_nodes_;
    std::vector<TemporalEdge> edges_;
    std::vector<std::int64_t> original_ids_;
    Timestamp t_start_ = 0;
    Timestamp t_end_ = 0;
    std::vector<std::size_t> nbr_offsets_;
    std::vector<Neighbor> nbrs_;
    std::vector<std::pair<std::int64_t, NodeId>> original_lookup_;
};

TemporalGraph parse_edge_list(std::istream& in, const ParseOptions& options = {});
TemporalGraph load_edge_list(const std::string& path, const ParseOptions& options = {});

// Text form `src,dst,timestamp` with original ids; parse_edge_list reads it back.
void write_edge_list(std::ostream& out, const TemporalGraph& g);

// Versioned binary cache.
void save_cache(const std::string& path, const TemporalGraph& g);
TemporalGraph load_cache(const std::string& path);
bool is_cache_file(const std::string& path);

// Cache when the file starts with the cache magic, edge-list text otherwise.
TemporalGraph load_graph(const std::string& path, const ParseOptions& options = {});

}  // namespace dnim::graph
