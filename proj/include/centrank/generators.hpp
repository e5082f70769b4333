#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "centrank/error.hpp"
#include "centrank/graph.hpp"
#include "centrank/rng.hpp"

namespace centrank {

// --- Erdős-Rényi G(n, p) ---------------------------------------------------

inline Graph erdos_renyi(VertexId n, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw InputError("erdos_renyi: p must be in [0,1]");
    std::vector<Edge> e;
    for (VertexId i = 0; i < n; ++i)
        for (VertexId j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) e.emplace_back(i, j);
    return from_edge_list(n, e);
}

inline Graph erdos_renyi(VertexId n, double p, std::uint64_t seed) {
    Rng rng(seed);
    return erdos_renyi(n, p, rng);
}

// --- Random power-law tree --------------------------------------------------

namespace detail {

// Discrete power law P(d) ∝ d^-gamma over d in [1, n-1], by inverse CDF.
class PowerLawDegreeSampler {
  public:
    PowerLawDegreeSampler(VertexId n, double gamma) {
        cdf_.reserve(n - 1);
        double acc = 0.0;
        for (VertexId d = 1; d < n; ++d) {
            acc += std::pow(double(d), -gamma);
            cdf_.push_back(acc);
        }
        for (double& c : cdf_) c /= acc;
    }

    VertexId draw(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return VertexId(it - cdf_.begin()) + 1;
    }

  private:
    std::vector<double> cdf_;
};

// Decodes a Prüfer sequence over vertices 0..n-1 into the unique tree with
// that code.
inline Graph prufer_decode(VertexId n, const std::vector<VertexId>& code) {
    std::vector<VertexId> deg(n, 1);
    for (VertexId v : code) ++deg[v];
    std::set<VertexId> leaves;
    for (VertexId v = 0; v < n; ++v)
        if (deg[v] == 1) leaves.insert(v);
    std::vector<Edge> edges;
    edges.reserve(n - 1);
    for (VertexId v : code) {
        const VertexId leaf = *leaves.begin();
        leaves.erase(leaves.begin());
        edges.emplace_back(leaf, v);
        if (--deg[v] == 1) leaves.insert(v);
    }
    const VertexId a = *leaves.begin();
    const VertexId b = *std::next(leaves.begin());
    edges.emplace_back(a, b);
    return from_edge_list(n, edges);
}

}  // namespace detail

// Draws a degree sequence from the discrete power law, repairs it toward the
// tree-realizability condition sum(deg) = 2(n-1) by resampling single entries
// (keeping a proposal only if it does not worsen the gap), then assembles a
// uniformly random tree with that degree sequence via its Prüfer code: vertex
// v appears deg(v)-1 times in the code, in shuffled order.
inline Graph powerlaw_tree(VertexId n, double gamma, Rng& rng, int tries = 100) {
    if (n < 2) throw InputError("powerlaw_tree: need n >= 2");
    if (gamma <= 1.0) throw InputError("powerlaw_tree: gamma must exceed 1");
    if (tries < 1) throw InputError("powerlaw_tree: tries must be positive");
    if (n == 2) return from_edge_list(2, {{0, 1}});

    const detail::PowerLawDegreeSampler sampler(n, gamma);
    const long target = 2L * (long(n) - 1);
    std::vector<VertexId> deg(n);
    long sum = 0;
    for (VertexId v = 0; v < n; ++v) {
        deg[v] = sampler.draw(rng);
        sum += deg[v];
    }
    const long budget = long(tries) * long(n);
    for (long step = 0; sum != target; ++step) {
        if (step >= budget) {
            throw GenerationError("powerlaw_tree: no degree sequence with sum " +
                                  std::to_string(target) + " found within " +
                                  std::to_string(tries) + " tries");
        }
        const std::size_t i = rng.index(n);
        const VertexId proposal = sampler.draw(rng);
        const long next = sum - long(deg[i]) + long(proposal);
        if (std::labs(next - target) <= std::labs(sum - target)) {
            deg[i] = proposal;
            sum = next;
        }
    }

    std::vector<VertexId> code;
    code.reserve(n - 2);
    for (VertexId v = 0; v < n; ++v)
        for (VertexId r = 1; r < deg[v]; ++r) code.push_back(v);
    rng.shuffle(code);
    return detail::prufer_decode(n, code);
}

inline Graph powerlaw_tree(VertexId n, double gamma, std::uint64_t seed, int tries = 100) {
    Rng rng(seed);
    return powerlaw_tree(n, gamma, rng, tries);
}

// --- Connected Watts-Strogatz ------------------------------------------------

namespace detail {

inline Graph watts_strogatz_once(VertexId n, VertexId k, double p, Rng& rng) {
    std::vector<std::set<VertexId>> adj(n);
    auto has = [&](VertexId a, VertexId b) { return adj[a].count(b) > 0; };
    auto link = [&](VertexId a, VertexId b) {
        adj[a].insert(b);
        adj[b].insert(a);
    };
    auto unlink = [&](VertexId a, VertexId b) {
        adj[a].erase(b);
        adj[b].erase(a);
    };
    for (VertexId j = 1; j <= k / 2; ++j)
        for (VertexId u = 0; u < n; ++u) link(u, (u + j) % n);
    // Rewire layer by layer, as in the reference small-world procedure.
    for (VertexId j = 1; j <= k / 2; ++j) {
        for (VertexId u = 0; u < n; ++u) {
            if (!rng.bernoulli(p)) continue;
            const VertexId v = (u + j) % n;
            if (adj[u].size() >= std::size_t(n) - 1) continue;  // saturated
            if (!has(u, v)) continue;  // already rewired away by an earlier step
            VertexId w = VertexId(rng.index(n));
            while (w == u || has(u, w)) w = VertexId(rng.index(n));
            unlink(u, v);
            link(u, w);
        }
    }
    std::vector<Edge> e;
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : adj[u])
            if (u < v) e.emplace_back(u, v);
    return from_edge_list(n, e);
}

}  // namespace detail

inline Graph connected_watts_strogatz(VertexId n, VertexId k, double p, Rng& rng,
                                      int tries = 100) {
    if (k % 2 != 0) throw InputError("connected_watts_strogatz: k must be even");
    if (k >= n) throw InputError("connected_watts_strogatz: k must be < n");
    for (int attempt = 0; attempt < tries; ++attempt) {
        Graph g = detail::watts_strogatz_once(n, k, p, rng);
        if (is_connected(g)) return g;
    }
    throw GenerationError("connected_watts_strogatz: no connected graph in " +
                          std::to_string(tries) + " tries");
}

inline Graph connected_watts_strogatz(VertexId n, VertexId k, double p,
                                      std::uint64_t seed, int tries = 100) {
    Rng rng(seed);
    return connected_watts_strogatz(n, k, p, rng, tries);
}

// --- Preferential attachment: Holme-Kim and Barabási-Albert ------------------

namespace detail {

// m distinct elements of `pool`, uniform over pool entries (so weighted by
// multiplicity), in draw order.
inline std::vector<VertexId> random_subset(const std::vector<VertexId>& pool,
                                           std::size_t m, Rng& rng) {
    std::vector<VertexId> out;
    std::set<VertexId> seen;
    while (out.size() < m) {
        const VertexId x = pool[rng.index(pool.size())];
        if (seen.insert(x).second) out.push_back(x);
    }
    return out;
}

}  // namespace detail

// Growth with preferential attachment plus triadic closure: the first of a
// new vertex's m attachments is always preferential; each remaining slot,
// with probability p, instead closes a triangle through a random neighbor of
// the last preferential target (when one is available).
inline Graph holme_kim(VertexId n, VertexId m, double p, Rng& rng) {
    if (m < 1 || m >= n) throw InputError("holme_kim: need 1 <= m < n");
    if (p < 0.0 || p > 1.0) throw InputError("holme_kim: p must be in [0,1]");
    std::vector<std::set<VertexId>> adj(n);
    auto add_edge = [&](VertexId a, VertexId b) {
        adj[a].insert(b);
        adj[b].insert(a);
    };
    std::vector<VertexId> repeated;  // one entry per edge endpoint
    for (VertexId v = 0; v < m; ++v) repeated.push_back(v);

    for (VertexId source = m; source < n; ++source) {
        std::vector<VertexId> targets = detail::random_subset(repeated, m, rng);
        VertexId target = targets.back();
        targets.pop_back();
        add_edge(source, target);
        repeated.push_back(target);
        VertexId count = 1;
        while (count < m) {
            if (rng.bernoulli(p)) {
                std::vector<VertexId> hood;
                for (VertexId nbr : adj[target])
                    if (nbr != source && !adj[source].count(nbr)) hood.push_back(nbr);
                if (!hood.empty()) {
                    const VertexId nbr = hood[rng.index(hood.size())];
                    add_edge(source, nbr);
                    repeated.push_back(nbr);
                    ++count;
                    continue;
                }
            }
            target = targets.back();
            targets.pop_back();
            add_edge(source, target);
            repeated.push_back(target);
            ++count;
        }
        for (VertexId r = 0; r < m; ++r) repeated.push_back(source);
    }

    std::vector<Edge> e;
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : adj[u])
            if (u < v) e.emplace_back(u, v);
    return from_edge_list(n, e);
}

inline Graph holme_kim(VertexId n, VertexId m, double p, std::uint64_t seed) {
    Rng rng(seed);
    return holme_kim(n, m, p, rng);
}

inline Graph barabasi_albert(VertexId n, VertexId m, Rng& rng) {
    if (m < 1 || m >= n) throw InputError("barabasi_albert: need 1 <= m < n");
    std::vector<Edge> e;
    std::vector<VertexId> repeated;
    std::vector<VertexId> targets(m);
    for (VertexId v = 0; v < m; ++v) targets[v] = v;  // first vertex takes the whole core
    for (VertexId source = m; source < n; ++source) {
        for (VertexId t : targets) {
            e.emplace_back(std::min(source, t), std::max(source, t));
            repeated.push_back(t);
            repeated.push_back(source);
        }
        targets = detail::random_subset(repeated, m, rng);
    }
    return from_edge_list(n, e);
}

inline Graph barabasi_albert(VertexId n, VertexId m, std::uint64_t seed) {
    Rng rng(seed);
    return barabasi_albert(n, m, rng);
}

// --- Shell graph --------------------------------------------------------------

// Hub vertex surrounded by concentric cycles; shell i holds round(π·i)
// vertices, each also linked (a "spoke") to the angularly nearest vertex of
// the shell inside it. The construction is deterministic: all variation comes
// from the caller's choice of n_target. Realized vertex counts form a sparse
// ladder (4, 10, 19, 32, 48, ...), so builders resample n_target when a range
// must be hit exactly.
inline Graph shell_graph(VertexId n_target) {
    if (n_target < 4) throw InputError("shell_graph: need n_target >= 4");
    std::vector<VertexId> shell_size;  // shells 1..k
    VertexId total = 1;                // hub
    for (VertexId i = 1;; ++i) {
        const VertexId s = VertexId(std::llround(std::numbers::pi * double(i)));
        if (total + s > n_target) break;
        shell_size.push_back(s);
        total += s;
    }
    std::vector<Edge> e;
    std::vector<VertexId> shell_start = {1};
    for (std::size_t i = 0; i + 1 < shell_size.size(); ++i)
        shell_start.push_back(shell_start.back() + shell_size[i]);

    for (std::size_t i = 0; i < shell_size.size(); ++i) {
        const VertexId s = shell_size[i];
        const VertexId base = shell_start[i];
        for (VertexId j = 0; j < s; ++j) e.emplace_back(base + j, base + (j + 1) % s);
        if (i == 0) {
            for (VertexId j = 0; j < s; ++j) e.emplace_back(VertexId(0), base + j);
        } else {
            const VertexId inner_s = shell_size[i - 1];
            const VertexId inner_base = shell_start[i - 1];
            for (VertexId j = 0; j < s; ++j) {
                const VertexId nearest =
                    VertexId(std::llround(double(j) / double(s) * double(inner_s))) % inner_s;
                e.emplace_back(base + j, inner_base + nearest);
            }
        }
    }
    return from_edge_list(total, e);
}

inline Graph shell_graph(VertexId n_target, std::uint64_t /*seed*/) {
    return shell_graph(n_target);
}

}  // namespace centrank
