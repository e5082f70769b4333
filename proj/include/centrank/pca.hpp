#pragma once
// 1-D principal-component projection of vertex embeddings, used to inspect
// what the message passing arranges the vertices by.

#include <cmath>
#include <cstddef>
#include <vector>

#include "centrank/error.hpp"
#include "centrank/tensor.hpp"

namespace centrank {

struct PcaResult {
    std::vector<double> projection;  // min-max normalized to [0,1], oriented
    std::vector<double> raw;         // centered projection before normalization
    double lambda = 0.0;             // variance captured by the direction
    bool degenerate = false;         // no spread to project (e.g. step 0)
};

// First principal direction of the rows of v [n x d] via power iteration on
// the population covariance (tol on the direction change, capped iterations;
// a tie between top eigenvalues just stops at the cap, which is fine for a
// qualitative projection). The sign is fixed so the vertex with the largest
// `orient_scores` entry lands at >= 1/2.
inline PcaResult pca_1d(const Tensor& v, const std::vector<double>& orient_scores,
                        double tol = 1e-10, std::size_t max_iter = 10000) {
    if (v.rank() != 2) throw ShapeError("pca_1d: embeddings must be [n, d]");
    const std::size_t n = v.dim(0), d = v.dim(1);
    if (n < 2) throw UsageError("pca_1d: needs at least two vertices");
    if (orient_scores.size() != n)
        throw ShapeError("pca_1d: orientation scores must have one entry per vertex");

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) mean[k] += v.at(i, k);
    for (double& m : mean) m /= double(n);

    std::vector<double> centered(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) centered[i * d + k] = v.at(i, k) - mean[k];

    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double va = centered[i * d + a];
            if (va == 0.0) continue;
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += va * centered[i * d + b];
        }
    for (double& c : cov) c /= double(n);

    PcaResult out;
    double trace = 0.0;
    std::size_t lead = 0;
    for (std::size_t a = 0; a < d; ++a) {
        trace += cov[a * d + a];
        if (cov[a * d + a] > cov[lead * d + lead]) lead = a;
    }
    if (trace <= 0.0) {
        out.degenerate = true;
        out.projection.assign(n, 0.5);
        out.raw.assign(n, 0.0);
        return out;
    }

    // Start from the dominant diagonal's column: it lies in the covariance's
    // range, so the iteration cannot stall in the null space.
    std::vector<double> x(d), y(d);
    for (std::size_t a = 0; a < d; ++a) x[a] = cov[a * d + lead];
    auto normalize = [&](std::vector<double>& w) {
        double norm = 0.0;
        for (double e : w) norm += e * e;
        norm = std::sqrt(norm);
        for (double& e : w) e /= norm;
        return norm;
    };
    normalize(x);
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t a = 0; a < d; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * x[b];
            y[a] = s;
        }
        normalize(y);
        double change = 0.0;
        for (std::size_t a = 0; a < d; ++a) change = std::max(change, std::abs(y[a] - x[a]));
        x = y;
        if (change < tol) break;
    }

    for (std::size_t a = 0; a < d; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * x[b];
        out.lambda += x[a] * s;
    }

    out.raw.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += centered[i * d + k] * x[k];
        out.raw[i] = s;
    }

    double lo = out.raw[0], hi = out.raw[0];
    for (double e : out.raw) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (hi - lo < 1e-12) {
        out.degenerate = true;
        out.projection.assign(n, 0.5);
        return out;
    }
    out.projection.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.projection[i] = (out.raw[i] - lo) / (hi - lo);

    std::size_t top = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (orient_scores[i] > orient_scores[top]) top = i;
    if (out.projection[top] < 0.5) {
        for (double& e : out.projection) e = 1.0 - e;
        for (double& e : out.raw) e = -e;
    }
    return out;
}

}  // namespace centrank
