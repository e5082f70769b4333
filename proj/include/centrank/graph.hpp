#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "centrank/error.hpp"

namespace centrank {

using VertexId = std::uint32_t;
using Edge = std::pair<VertexId, VertexId>;  // canonical: first < second

// Undirected simple graph. Edges are stored canonically (i < j, sorted
// lexicographically), which makes equality and serialization trivial.
struct Graph {
    VertexId n = 0;
    std::vector<Edge> edges;

    std::size_t edge_count() const { return edges.size(); }

    bool operator==(const Graph& other) const = default;

    std::vector<std::vector<VertexId>> neighbor_lists() const {
        std::vector<std::vector<VertexId>> adj(n);
        for (const auto& [i, j] : edges) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
        return adj;
    }

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> deg(n, 0);
        for (const auto& [i, j] : edges) {
            ++deg[i];
            ++deg[j];
        }
        return deg;
    }
};

// Dense 0/1 adjacency, symmetric with zero diagonal.
struct AdjacencyMatrix {
    VertexId n = 0;
    std::vector<double> entries;  // row-major n*n

    double at(VertexId i, VertexId j) const { return entries[std::size_t(i) * n + j]; }
};

struct BatchedGraph {
    std::vector<Graph> graphs;
    std::vector<VertexId> offsets;  // start index of each member in the union
    Graph union_graph;

    // Member graph recovered from the union, for round-trip checks.
    Graph extract(std::size_t k) const {
        const Graph& g = graphs[k];
        const VertexId off = offsets[k];
        Graph out;
        out.n = g.n;
        for (const auto& [i, j] : union_graph.edges) {
            if (i >= off && i < off + g.n) {
                out.edges.emplace_back(i - off, j - off);
            }
        }
        std::sort(out.edges.begin(), out.edges.end());
        return out;
    }
};

// Builds a Graph from (possibly messy) vertex pairs: drops self-loops,
// collapses duplicates and both edge directions.
inline Graph from_edge_list(VertexId n, const std::vector<Edge>& pairs) {
    if (n == 0) throw InputError("from_edge_list: vertex count must be positive");
    Graph g;
    g.n = n;
    g.edges.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        if (a >= n || b >= n) {
            throw InputError("from_edge_list: vertex index " +
                             std::to_string(std::max(a, b)) + " out of range [0, " +
                             std::to_string(n) + ")");
        }
        if (a == b) continue;
        g.edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

inline AdjacencyMatrix adjacency(const Graph& g) {
    AdjacencyMatrix m;
    m.n = g.n;
    m.entries.assign(std::size_t(g.n) * g.n, 0.0);
    for (const auto& [i, j] : g.edges) {
        m.entries[std::size_t(i) * g.n + j] = 1.0;
        m.entries[std::size_t(j) * g.n + i] = 1.0;
    }
    return m;
}

inline BatchedGraph disjoint_union(const std::vector<Graph>& gs) {
    if (gs.empty()) throw InputError("disjoint_union: empty graph list");
    BatchedGraph b;
    b.graphs = gs;
    VertexId total = 0;
    for (const Graph& g : gs) {
        b.offsets.push_back(total);
        total += g.n;
    }
    b.union_graph.n = total;
    for (std::size_t k = 0; k < gs.size(); ++k) {
        const VertexId off = b.offsets[k];
        for (const auto& [i, j] : gs[k].edges) {
            b.union_graph.edges.emplace_back(i + off, j + off);
        }
    }
    std::sort(b.union_graph.edges.begin(), b.union_graph.edges.end());
    return b;
}

inline bool is_connected(const Graph& g) {
    if (g.n == 0) throw InputError("is_connected: empty graph");
    const auto adj = g.neighbor_lists();
    std::vector<char> seen(g.n, 0);
    std::queue<VertexId> q;
    q.push(0);
    seen[0] = 1;
    VertexId reached = 1;
    while (!q.empty()) {
        const VertexId v = q.front();
        q.pop();
        for (VertexId w : adj[v]) {
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                q.push(w);
            }
        }
    }
    return reached == g.n;
}

enum class EdgeListFormat { SnapEdgeList, MatrixMarket };

namespace detail {

inline bool parse_u64(const std::string& tok, std::uint64_t& out) {
    if (tok.empty()) return false;
    out = 0;
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        out = out * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return true;
}

}  // namespace detail

// Parses an external edge-list file into a Graph. Vertices are relabeled to a
// contiguous 0-based range in first-appearance order (including vertices seen
// only in dropped self-loops). Directed entries are symmetrized; self-loops
// and duplicates are dropped.
//
//   snap-edgelist: whitespace-separated integer pairs, one per line,
//                  '#'-prefixed comment lines.
//   matrix-market: '%%MatrixMarket' header, '%' comments, first non-comment
//                  line is "rows cols nnz", then 1-based "i j [value]".
inline Graph parse_edge_list(std::istream& in, EdgeListFormat format) {
    std::vector<Edge> pairs;
    std::unordered_map<std::uint64_t, VertexId> relabel;
    relabel.reserve(1024);
    auto id_of = [&](std::uint64_t raw) {
        auto [it, inserted] = relabel.emplace(raw, static_cast<VertexId>(relabel.size()));
        (void)inserted;
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    bool mm_header_seen = false;
    bool mm_dims_seen = false;
    std::uint64_t mm_rows = 0, mm_cols = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;

        if (format == EdgeListFormat::SnapEdgeList) {
            if (line[first] == '#') continue;
        } else {
            if (line[first] == '%') {
                if (!mm_header_seen) {
                    if (line.compare(first, 14, "%%MatrixMarket") != 0) {
                        throw ParseError("line " + std::to_string(line_no) +
                                         ": expected %%MatrixMarket header");
                    }
                    mm_header_seen = true;
                }
                continue;
            }
            if (!mm_header_seen) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": missing %%MatrixMarket header");
            }
        }

        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) toks.push_back(tok);

        if (format == EdgeListFormat::MatrixMarket && !mm_dims_seen) {
            // Dimension line "rows cols nnz": consumed, used only to validate indices.
            std::uint64_t nnz = 0;
            if (toks.size() != 3 || !detail::parse_u64(toks[0], mm_rows) ||
                !detail::parse_u64(toks[1], mm_cols) || !detail::parse_u64(toks[2], nnz)) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": malformed matrix-market dimension line");
            }
            mm_dims_seen = true;
            continue;
        }

        std::uint64_t u = 0, v = 0;
        if (format == EdgeListFormat::SnapEdgeList) {
            if (toks.size() != 2 || !detail::parse_u64(toks[0], u) ||
                !detail::parse_u64(toks[1], v)) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected two integer vertex ids, got '" + line + "'");
            }
        } else {
            // Coordinate entries may carry a value column; it is ignored.
            if ((toks.size() != 2 && toks.size() != 3) || !detail::parse_u64(toks[0], u) ||
                !detail::parse_u64(toks[1], v)) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": malformed coordinate entry '" + line + "'");
            }
            if (u == 0 || v == 0 || u > mm_rows || v > mm_cols) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": coordinate outside declared dimensions");
            }
        }
        const VertexId a = id_of(u);
        const VertexId b = id_of(v);
        if (a != b) pairs.emplace_back(a, b);
    }

    if (format == EdgeListFormat::MatrixMarket && !mm_header_seen) {
        throw ParseError("missing %%MatrixMarket header");
    }
    const VertexId n = static_cast<VertexId>(relabel.size());
    if (n == 0) throw ParseError("no vertices found in input");
    return from_edge_list(n, pairs);
}

inline Graph parse_edge_list(const std::string& text, EdgeListFormat format) {
    std::istringstream in(text);
    return parse_edge_list(in, format);
}

// Canonical dataset serialization: header "n m", then m lines "i j" with
// i < j, sorted lexicographically.
inline void save_graph(std::ostream& out, const Graph& g) {
    out << g.n << ' ' << g.edges.size() << '\n';
    for (const auto& [i, j] : g.edges) {
        out << i << ' ' << j << '\n';
    }
}

inline std::string graph_to_string(const Graph& g) {
    std::ostringstream out;
    save_graph(out, g);
    return out.str();
}

inline Graph load_graph(std::istream& in) {
    std::uint64_t n = 0, m = 0;
    if (!(in >> n >> m)) throw ParseError("graph header: expected 'n m'");
    std::vector<Edge> pairs;
    pairs.reserve(m);
    for (std::uint64_t k = 0; k < m; ++k) {
        std::uint64_t i = 0, j = 0;
        if (!(in >> i >> j)) {
            throw ParseError("graph body: expected edge " + std::to_string(k + 1) +
                             " of " + std::to_string(m));
        }
        pairs.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(j));
    }
    return from_edge_list(static_cast<VertexId>(n), pairs);
}

inline Graph graph_from_string(const std::string& text) {
    std::istringstream in(text);
    return load_graph(in);
}

}  // namespace centrank
