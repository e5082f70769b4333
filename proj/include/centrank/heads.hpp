#pragma once
// Training heads on top of the vertex embeddings: per-centrality regression
// MLPs with three MSE flavours (AN on normalized targets, AU on raw targets,
// AM with model-side min-max normalization) and the pairwise comparator head
// trained with binary cross entropy (RN).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "centrank/centrality.hpp"
#include "centrank/error.hpp"
#include "centrank/gnn.hpp"
#include "centrank/optim.hpp"
#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"

namespace centrank {

enum class HeadMode { AN, AU, AM, RN };

inline const char* head_mode_name(HeadMode m) {
    switch (m) {
        case HeadMode::AN: return "an";
        case HeadMode::AU: return "au";
        case HeadMode::AM: return "am";
        case HeadMode::RN: return "rn";
    }
    throw UsageError("head_mode_name: bad mode");
}

inline HeadMode head_mode_from_name(const std::string& s) {
    if (s == "an") return HeadMode::AN;
    if (s == "au") return HeadMode::AU;
    if (s == "am") return HeadMode::AM;
    if (s == "rn") return HeadMode::RN;
    throw ConfigError("unknown head mode '" + s + "' (expected an, au, am or rn)");
}

struct HeadParams {
    HeadMode mode = HeadMode::RN;
    std::vector<Measure> centralities;  // unique, in kAllMeasures order
    std::map<Measure, Mlp> heads;       // (d,d,1) for AN/AU/AM, (2d,2d,1) for RN

    bool multitask() const { return centralities.size() == std::size(kAllMeasures); }
    const Mlp& head_for(Measure m) const {
        auto it = heads.find(m);
        if (it == heads.end())
            throw UsageError(std::string("no head for centrality '") + measure_name(m) + "'");
        return it->second;
    }
};

// Registers head parameters under "head/{mode}/{centrality}/{layer}/{w,b}".
inline HeadParams init_head_params(ParamStore& store, HeadMode mode,
                                   const std::vector<Measure>& centralities, std::size_t d,
                                   std::uint64_t seed) {
    if (centralities.empty()) throw UsageError("init_head_params: no centralities given");
    HeadParams h;
    h.mode = mode;
    for (Measure m : kAllMeasures) {
        std::size_t hits = 0;
        for (Measure c : centralities)
            if (c == m) ++hits;
        if (hits > 1)
            throw UsageError(std::string("init_head_params: duplicate centrality '") +
                             measure_name(m) + "'");
        if (hits == 0) continue;
        h.centralities.push_back(m);
        const std::size_t in = mode == HeadMode::RN ? 2 * d : d;
        const std::vector<std::size_t> widths = {in, in, in, 1};
        const std::string prefix =
            std::string("head/") + head_mode_name(mode) + "/" + measure_name(m);
        h.heads.emplace(m, detail::init_mlp(store, prefix, widths,
                                            derive_seed(seed, std::uint64_t(m))));
    }
    return h;
}

// Per-vertex scalar predictions for the regression modes; linear output.
inline Tensor approx_forward(const HeadParams& head, Measure measure, const Tensor& v) {
    if (head.mode == HeadMode::RN)
        throw UsageError("approx_forward: head is a pairwise comparator");
    return mlp_forward(head.head_for(measure), v);  // [n, 1]
}

// Fuzzy comparison matrix: logits[i*n+j] scores "vertex j outranks vertex i",
// matching the label-matrix orientation; probabilities are their sigmoids.
struct ComparisonMatrix {
    std::size_t n = 0;
    Tensor logits;  // [n*n, 1], row-major over ordered pairs (i, j)

    double logit(std::size_t i, std::size_t j) const { return logits.data()[i * n + j]; }
    double probability(std::size_t i, std::size_t j) const {
        return 1.0 / (1.0 + std::exp(-logit(i, j)));
    }
};

inline ComparisonMatrix cmp_forward(const HeadParams& head, Measure measure, const Tensor& v) {
    if (head.mode != HeadMode::RN)
        throw UsageError("cmp_forward: head is not a pairwise comparator");
    if (v.rank() != 2) throw ShapeError("cmp_forward: embeddings must be [n, d]");
    const std::size_t n = v.dim(0);
    std::vector<std::size_t> rows(n * n), cols(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            rows[i * n + j] = i;
            cols[i * n + j] = j;
        }
    Tensor pairs = concat({gather_rows(v, rows), gather_rows(v, cols)}, 1);  // [n*n, 2d]
    ComparisonMatrix cm;
    cm.n = n;
    cm.logits = mlp_forward(head.head_for(measure), pairs);
    return cm;
}

// Mean binary cross entropy over all n*n ordered pairs, diagonal included
// (its label is 0), computed in the numerically stable logit form.
inline Tensor rn_loss(const ComparisonMatrix& cm, const LabelMatrix& labels) {
    if (labels.n != cm.n || cm.logits.size() != cm.n * cm.n)
        throw ShapeError("rn_loss: comparison matrix and labels disagree on n");
    std::vector<double> t(labels.entries.begin(), labels.entries.end());
    return bce_with_logits_mean(cm.logits, Tensor::from({cm.n * cm.n, 1}, std::move(t)));
}

namespace detail {

inline Tensor target_like(const Tensor& pred, const CentralityVector& c, const char* op) {
    if (pred.size() != c.values.size())
        throw ShapeError(std::string(op) + ": prediction and target lengths differ");
    std::vector<std::size_t> shape;
    for (std::size_t k = 0; k < pred.rank(); ++k) shape.push_back(pred.dim(k));
    return Tensor::from(std::move(shape), c.values);
}

}  // namespace detail

// MSE against normalized oracle values.
inline Tensor an_loss(const Tensor& pred, const CentralityVector& c) {
    if (!c.normalized) throw UsageError("an_loss: targets must be normalized");
    return mean_all(square(sub(pred, detail::target_like(pred, c, "an_loss"))));
}

// MSE against raw oracle values.
inline Tensor au_loss(const Tensor& pred, const CentralityVector& c) {
    if (c.normalized) throw UsageError("au_loss: targets must be unnormalized");
    return mean_all(square(sub(pred, detail::target_like(pred, c, "au_loss"))));
}

// Min-max-rescale the predictions across this graph's vertices (guarded:
// a constant vector maps to zeros), then MSE against normalized targets.
// Callers batch-train by applying this per member graph, never across graphs.
inline Tensor am_loss(const Tensor& pred, const CentralityVector& c) {
    if (pred.size() < 2) throw UsageError("am_loss: needs at least two vertices");
    if (!c.normalized) throw UsageError("am_loss: targets must be normalized");
    return mean_all(
        square(sub(minmax_normalize(pred), detail::target_like(pred, c, "am_loss"))));
}

// Strict pairwise comparison of a score vector: (i,j)=1 iff score_j > score_i.
// Ties produce 0 in both orientations, so they count against strict labels.
inline LabelMatrix comparison_from_scores(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    for (double s : scores)
        if (!std::isfinite(s)) throw InputError("comparison_from_scores: non-finite score");
    LabelMatrix m;
    m.n = VertexId(n);
    m.entries.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (scores[j] > scores[i]) m.entries[i * n + j] = 1;
    return m;
}

// Hard decisions from the comparator: 1 iff probability > 1/2 (logit > 0).
inline LabelMatrix binarize_comparison(const ComparisonMatrix& cm) {
    LabelMatrix m;
    m.n = VertexId(cm.n);
    m.entries.assign(cm.n * cm.n, 0);
    const std::vector<double>& z = cm.logits.data();
    for (std::size_t k = 0; k < z.size(); ++k)
        if (z[k] > 0.0) m.entries[k] = 1;
    return m;
}

}  // namespace centrank
