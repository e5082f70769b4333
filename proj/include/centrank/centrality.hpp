#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stack>
#include <string>
#include <vector>

#include "centrank/error.hpp"
#include "centrank/graph.hpp"

namespace centrank {

enum class Measure { Degree, Betweenness, Closeness, Eigenvector };

inline const char* measure_name(Measure m) {
    switch (m) {
        case Measure::Degree: return "degree";
        case Measure::Betweenness: return "betweenness";
        case Measure::Closeness: return "closeness";
        case Measure::Eigenvector: return "eigenvector";
    }
    return "?";
}

inline Measure measure_from_name(const std::string& s) {
    if (s == "degree") return Measure::Degree;
    if (s == "betweenness") return Measure::Betweenness;
    if (s == "closeness") return Measure::Closeness;
    if (s == "eigenvector") return Measure::Eigenvector;
    throw ConfigError("unknown centrality measure '" + s + "'");
}

constexpr Measure kAllMeasures[] = {Measure::Degree, Measure::Betweenness,
                                    Measure::Closeness, Measure::Eigenvector};

struct CentralityVector {
    Measure measure;
    std::vector<double> values;
    bool normalized = false;
};

// Strict-total-order label matrix: entry (i,j)=1 means j outranks i.
struct LabelMatrix {
    VertexId n = 0;
    std::vector<std::uint8_t> entries;  // row-major n*n

    std::uint8_t at(VertexId i, VertexId j) const { return entries[std::size_t(i) * n + j]; }
};

inline CentralityVector degree_centrality(const Graph& g, bool normalized) {
    if (normalized && g.n < 2) {
        throw InputError("degree_centrality: normalization needs n >= 2");
    }
    CentralityVector out{Measure::Degree, std::vector<double>(g.n, 0.0), normalized};
    const auto deg = g.degrees();
    const double scale = normalized ? 1.0 / double(g.n - 1) : 1.0;
    for (VertexId v = 0; v < g.n; ++v) out.values[v] = double(deg[v]) * scale;
    return out;
}

// Brandes' single-source accumulation over BFS shortest paths. Endpoints are
// not counted; the undirected double count is halved. Normalization divides
// by (n-1)(n-2)/2, the number of vertex pairs that could route through v.
inline CentralityVector betweenness_centrality(const Graph& g, bool normalized) {
    if (normalized && g.n < 3) {
        throw InputError("betweenness_centrality: normalization needs n >= 3");
    }
    const auto adj = g.neighbor_lists();
    std::vector<double> bc(g.n, 0.0);

    std::vector<std::int64_t> dist(g.n);
    std::vector<double> sigma(g.n), delta(g.n);
    std::vector<std::vector<VertexId>> pred(g.n);
    std::vector<VertexId> order;
    order.reserve(g.n);

    for (VertexId s = 0; s < g.n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        for (auto& p : pred) p.clear();
        order.clear();

        dist[s] = 0;
        sigma[s] = 1.0;
        std::queue<VertexId> q;
        q.push(s);
        while (!q.empty()) {
            const VertexId v = q.front();
            q.pop();
            order.push_back(v);
            for (VertexId w : adj[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    q.push(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    pred[w].push_back(v);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const VertexId w = *it;
            for (VertexId v : pred[w]) {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if (w != s) bc[w] += delta[w];
        }
    }

    double scale = 0.5;  // each unordered pair was accumulated from both sources
    if (normalized) scale /= double(g.n - 1) * double(g.n - 2) / 2.0;
    for (double& v : bc) v *= scale;
    return {Measure::Betweenness, std::move(bc), normalized};
}

// Reciprocal of the average geodesic distance to reachable vertices, with the
// reachable-component correction |R|/(n-1) applied under normalization so
// vertices in small components score low. Isolated vertices get 0.
inline CentralityVector closeness_centrality(const Graph& g, bool normalized) {
    if (g.n < 2) throw InputError("closeness_centrality: needs n >= 2");
    const auto adj = g.neighbor_lists();
    std::vector<double> cc(g.n, 0.0);
    std::vector<std::int64_t> dist(g.n);

    for (VertexId s = 0; s < g.n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        std::queue<VertexId> q;
        q.push(s);
        std::int64_t total = 0;
        std::int64_t reached = 0;  // excludes s
        while (!q.empty()) {
            const VertexId v = q.front();
            q.pop();
            for (VertexId w : adj[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    total += dist[w];
                    ++reached;
                    q.push(w);
                }
            }
        }
        if (reached > 0) {
            double val = double(reached) / double(total);
            if (normalized) val *= double(reached) / double(g.n - 1);
            cc[s] = val;
        }
    }
    return {Measure::Closeness, std::move(cc), normalized};
}

struct EigenResult {
    std::vector<double> vector;  // L2-normalized, non-negative
    double lambda = 0.0;         // Rayleigh quotient at the fixed point
};

// Power iteration for the dominant adjacency eigenpair. Iterating on I + M
// rather than M alone keeps the fixed point identical (shifts every
// eigenvalue by one) while breaking the period-2 oscillation that plain
// iteration exhibits on bipartite graphs, where the spectrum is symmetric.
inline EigenResult eigenvector_centrality_impl(const Graph& g, double tol, int max_iter) {
    if (g.edges.empty()) throw InputError("eigenvector_centrality: graph has no edges");
    const auto adj = g.neighbor_lists();
    const std::size_t n = g.n;
    std::vector<double> x(n, 1.0 / double(n)), y(n);

    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t v = 0; v < n; ++v) {
            double acc = x[v];
            for (VertexId w : adj[v]) acc += x[w];
            y[v] = acc;
        }
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) throw NumericError("eigenvector_centrality: zero iterate");
        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            y[v] /= norm;
            change += std::abs(y[v] - x[v]);
        }
        x.swap(y);
        if (change < double(n) * tol) {
            double lambda = 0.0;
            for (std::size_t v = 0; v < n; ++v) {
                double mv = 0.0;
                for (VertexId w : adj[v]) mv += x[w];
                lambda += x[v] * mv;
            }
            return {std::move(x), lambda};
        }
    }
    throw ConvergenceError("eigenvector_centrality: no convergence after " +
                           std::to_string(max_iter) + " iterations");
}

inline CentralityVector eigenvector_centrality(const Graph& g, double tol = 1e-6,
                                               int max_iter = 1000) {
    EigenResult r = eigenvector_centrality_impl(g, tol, max_iter);
    return {Measure::Eigenvector, std::move(r.vector), true};
}

inline CentralityVector centrality(const Graph& g, Measure m, bool normalized) {
    switch (m) {
        case Measure::Degree: return degree_centrality(g, normalized);
        case Measure::Betweenness: return betweenness_centrality(g, normalized);
        case Measure::Closeness: return closeness_centrality(g, normalized);
        case Measure::Eigenvector:
            if (!normalized) {
                // The raw variant rescales the unit fixed point by its
                // eigenvalue, mirroring M·v = λ·v before normalization.
                EigenResult r = eigenvector_centrality_impl(g, 1e-6, 1000);
                for (double& v : r.vector) v *= r.lambda;
                return {Measure::Eigenvector, std::move(r.vector), false};
            }
            return eigenvector_centrality(g);
    }
    throw UsageError("centrality: bad measure enum");
}

// entry (i,j) = 1 iff j strictly outranks i; exact ties fall back to vertex
// index so the result is always a strict total order.
inline LabelMatrix rank_label_matrix(const CentralityVector& c) {
    const std::size_t n = c.values.size();
    for (double v : c.values) {
        if (!std::isfinite(v)) throw InputError("rank_label_matrix: non-finite value");
    }
    LabelMatrix m;
    m.n = static_cast<VertexId>(n);
    m.entries.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool outranks =
                c.values[j] > c.values[i] || (c.values[j] == c.values[i] && j > i);
            m.entries[i * n + j] = outranks ? 1 : 0;
        }
    }
    return m;
}

}  // namespace centrank
