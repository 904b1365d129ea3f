#include "graph/temporal_graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "common/error.hpp"

namespace dnim::graph {

static_assert(std::endian::native == std::endian::little, "binary cache assumes little-endian hosts");

namespace {

constexpr char kCacheMagic[8] = {'D', 'N', 'I', 'M', 'G', 'R', 'P', 'H'};
constexpr std::uint32_t kCacheVersion = 1;

struct RawEdge {
    std::int64_t src;
    std::int64_t dst;
    Timestamp timestamp;
};

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    if (delimiter == '\0')
        delimiter = line.find(',') != std::string_view::npos ? ',' : ' ';
    const bool whitespace = delimiter == ' ' || delimiter == '\t';
    std::size_t pos = 0;
    while (pos <= line.size()) {
        if (whitespace) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos == line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
            out.push_back(line.substr(pos, end - pos));
            pos = end;
        } else {
            std::size_t end = line.find(delimiter, pos);
            if (end == std::string_view::npos) end = line.size();
            auto tok = line.substr(pos, end - pos);
            while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
            while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
            out.push_back(tok);
            pos = end + 1;
        }
    }
    return out;
}

std::optional<std::int64_t> parse_int(std::string_view tok) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_real(std::string_view tok) {
    if (tok.empty()) return std::nullopt;
    std::string buf(tok);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Integer seconds; decimal timestamps (some SNAP exports) are floored.
std::optional<Timestamp> parse_timestamp(std::string_view tok) {
    if (auto v = parse_int(tok)) return v;
    if (auto r = parse_real(tok)) return static_cast<Timestamp>(std::floor(*r));
    return std::nullopt;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
    throw DataError("line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

TemporalGraph::TemporalGraph(std::size_t n_nodes, std::vector<TemporalEdge> edges,
                             std::vector<std::int64_t> original_ids,
                             std::optional<Timestamp> t_start, std::optional<Timestamp> t_end)
    : n_nodes_(n_nodes), edges_(std::move(edges)), original_ids_(std::move(original_ids)) {
    if (n_nodes_ == 0) throw DataError("graph needs at least one node");
    if (original_ids_.empty()) {
        original_ids_.resize(n_nodes_);
        std::iota(original_ids_.begin(), original_ids_.end(), std::int64_t{0});
    }
    if (original_ids_.size() != n_nodes_) throw DataError("original id table size does not match node count");
    for (const auto& e : edges_)
        if (e.src >= n_nodes_ || e.dst >= n_nodes_) throw DataError("edge endpoint out of range");

    if (t_start && t_end && *t_start > *t_end) throw UsageError("window start after window end");
    std::erase_if(edges_, [&](const TemporalEdge& e) {
        return (t_start && e.timestamp < *t_start) || (t_end && e.timestamp > *t_end);
    });
    std::stable_sort(edges_.begin(), edges_.end(),
                     [](const TemporalEdge& a, const TemporalEdge& b) { return a.timestamp < b.timestamp; });

    const Timestamp lo = edges_.empty() ? 0 : edges_.front().timestamp;
    const Timestamp hi = edges_.empty() ? 0 : edges_.back().timestamp;
    t_start_ = t_start.value_or(t_end && edges_.empty() ? *t_end : lo);
    t_end_ = t_end.value_or(std::max(hi, t_start_));
    if (t_start_ > t_end_) throw UsageError("window start after window end");

    nbr_offsets_.assign(n_nodes_ + 1, 0);
    for (const auto& e : edges_) {
        ++nbr_offsets_[e.src + 1];
        ++nbr_offsets_[e.dst + 1];
    }
    std::partial_sum(nbr_offsets_.begin(), nbr_offsets_.end(), nbr_offsets_.begin());
    nbrs_.resize(nbr_offsets_.back());
    std::vector<std::size_t> fill(nbr_offsets_.begin(), nbr_offsets_.end() - 1);
    // Edges are time-sorted, so appending in edge order keeps each list sorted.
    for (const auto& e : edges_) {
        nbrs_[fill[e.src]++] = {e.dst, e.timestamp};
        nbrs_[fill[e.dst]++] = {e.src, e.timestamp};
    }

    original_lookup_.reserve(n_nodes_);
    for (NodeId v = 0; v < n_nodes_; ++v) original_lookup_.emplace_back(original_ids_[v], v);
    std::sort(original_lookup_.begin(), original_lookup_.end());
}

std::int64_t TemporalGraph::original_id(NodeId v) const {
    if (v >= n_nodes_) throw UsageError("node id " + std::to_string(v) + " out of range");
    return original_ids_[v];
}

std::optional<NodeId> TemporalGraph::find_original(std::int64_t original) const {
    auto it = std::lower_bound(original_lookup_.begin(), original_lookup_.end(),
                               std::pair<std::int64_t, NodeId>{original, 0});
    if (it == original_lookup_.end() || it->first != original) return std::nullopt;
    return it->second;
}

std::span<const Neighbor> TemporalGraph::temporal_neighbors(NodeId v) const {
    if (v >= n_nodes_) throw UsageError("node id " + std::to_string(v) + " out of range");
    return std::span<const Neighbor>(nbrs_).subspan(nbr_offsets_[v], nbr_offsets_[v + 1] - nbr_offsets_[v]);
}

std::vector<std::size_t> TemporalGraph::out_degrees() const {
    std::vector<std::size_t> deg(n_nodes_, 0);
    for (const auto& e : edges_) ++deg[e.src];
    return deg;
}

TemporalGraph TemporalGraph::with_window(std::optional<Timestamp> t_start, std::optional<Timestamp> t_end) const {
    return TemporalGraph(n_nodes_, edges_, original_ids_, t_start, t_end);
}

TemporalGraph parse_edge_list(std::istream& in, const ParseOptions& options) {
    std::vector<RawEdge> raw;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        while (!view.empty() && (view.back() == '\r' || view.back() == ' ' || view.back() == '\t'))
            view.remove_suffix(1);
        while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) view.remove_prefix(1);
        if (view.empty() || view.front() == '#' || view.front() == '%') continue;

        const auto tok = split(view, options.delimiter);
        const bool first = !seen_data;
        seen_data = true;

        std::size_t ts_col = 0;
        switch (options.weight) {
        case WeightColumn::present:
            if (tok.size() != 4) malformed(line_no, "expected src,dst,weight,timestamp");
            ts_col = 3;
            break;
        case WeightColumn::absent:
            if (tok.size() != 3) malformed(line_no, "expected src,dst,timestamp");
            ts_col = 2;
            break;
        case WeightColumn::automatic:
            if (tok.size() != 3 && tok.size() != 4) malformed(line_no, "expected 3 or 4 columns");
            ts_col = tok.size() - 1;
            break;
        }

        auto src = parse_int(tok[0]);
        auto dst = parse_int(tok[1]);
        auto ts = parse_timestamp(tok[ts_col]);
        if (first && !src && !dst && !ts) continue;  // header row
        if (!src || !dst) malformed(line_no, "node ids must be integers");
        if (!ts) malformed(line_no, "timestamp must be an integer");
        if (ts_col == 3 && !parse_real(tok[2])) malformed(line_no, "weight must be numeric");
        raw.push_back({*src, *dst, *ts});
    }
    if (raw.empty()) throw DataError("no edges");

    std::stable_sort(raw.begin(), raw.end(), [](const RawEdge& a, const RawEdge& b) { return a.timestamp < b.timestamp; });

    // Dense ids in order of first appearance along the time-sorted stream.
    std::unordered_map<std::int64_t, NodeId> dense;
    std::vector<std::int64_t> originals;
    auto intern = [&](std::int64_t id) {
        auto [it, inserted] = dense.try_emplace(id, static_cast<NodeId>(originals.size()));
        if (inserted) originals.push_back(id);
        return it->second;
    };

    std::vector<TemporalEdge> edges;
    edges.reserve(raw.size());
    for (const auto& r : raw) {
        const NodeId s = intern(r.src);
        const NodeId d = intern(r.dst);
        if (options.drop_loops && s == d) continue;
        edges.push_back({s, d, r.timestamp});
    }

    if (options.dedup) {
        struct Hash {
            std::size_t operator()(const TemporalEdge& e) const noexcept {
                return std::hash<std::uint64_t>{}((std::uint64_t{e.src} << 32 | e.dst) ^
                                                  static_cast<std::uint64_t>(e.timestamp) * 0x9e3779b97f4a7c15ULL);
            }
        };
        std::unordered_set<TemporalEdge, Hash> seen;
        std::erase_if(edges, [&](const TemporalEdge& e) { return !seen.insert(e).second; });
    }

    std::optional<Timestamp> lo, hi;
    if (edges.empty()) {
        lo = raw.front().timestamp;
        hi = raw.back().timestamp;
    }
    const std::size_t n = originals.size();
    return TemporalGraph(n, std::move(edges), std::move(originals), lo, hi);
}

TemporalGraph load_edge_list(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_edge_list(in, options);
}

void write_edge_list(std::ostream& out, const TemporalGraph& g) {
    for (const auto& e : g.edges())
        out << g.original_id(e.src) << ',' << g.original_id(e.dst) << ',' << e.timestamp << '\n';
}

namespace {

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated graph cache");
    return v;
}

}  // namespace

void save_cache(const std::string& path, const TemporalGraph& g) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, kCacheVersion);
    put(out, std::uint32_t{0});
    put(out, static_cast<std::uint64_t>(g.n_nodes()));
    put(out, static_cast<std::uint64_t>(g.n_edges()));
    put(out, g.t_start());
    put(out, g.t_end());
    for (auto id : g.original_ids()) put(out, id);
    for (const auto& e : g.edges()) {
        put(out, e.src);
        put(out, e.dst);
        put(out, e.timestamp);
    }
    if (!out) throw DataError("failed writing " + path);
}

bool is_cache_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[sizeof kCacheMagic] = {};
    in.read(magic, sizeof magic);
    return in && std::memcmp(magic, kCacheMagic, sizeof magic) == 0;
}

TemporalGraph load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[sizeof kCacheMagic] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) throw DataError(path + " is not a graph cache");
    const auto version = get<std::uint32_t>(in);
    if (version != kCacheVersion)
        throw DataError("unsupported graph cache version " + std::to_string(version));
    get<std::uint32_t>(in);
    const auto n = get<std::uint64_t>(in);
    const auto m = get<std::uint64_t>(in);
    const auto ts = get<Timestamp>(in);
    const auto te = get<Timestamp>(in);
    std::vector<std::int64_t> originals(n);
    for (auto& id : originals) id = get<std::int64_t>(in);
    std::vector<TemporalEdge> edges(m);
    for (auto& e : edges) {
        e.src = get<NodeId>(in);
        e.dst = get<NodeId>(in);
        e.timestamp = get<Timestamp>(in);
    }
    return TemporalGraph(n, std::move(edges), std::move(originals), ts, te);
}

TemporalGraph load_graph(const std::string& path, const ParseOptions& options) {
    if (is_cache_file(path)) return load_cache(path);
    return load_edge_list(path, options);
}

}  // namespace dnim::graph
