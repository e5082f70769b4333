#pragma once
// Ranking metrics: confusion counts over ordered vertex pairs, the four
// rates, and Kendall's tau-b with tie corrections.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "centrank/centrality.hpp"
#include "centrank/error.hpp"

namespace centrank {

struct PairCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

// Confusion counts over all off-diagonal ordered pairs; entry 1 is the
// positive class. Self-pairs carry no ranking information and are skipped.
inline PairCounts pair_counts(const LabelMatrix& pred, const LabelMatrix& truth) {
    if (pred.n != truth.n) throw ShapeError("pair_counts: dimension mismatch");
    PairCounts c;
    for (VertexId i = 0; i < pred.n; ++i)
        for (VertexId j = 0; j < pred.n; ++j) {
            if (i == j) continue;
            const bool p = pred.at(i, j) != 0;
            const bool t = truth.at(i, j) != 0;
            if (p && t) ++c.tp;
            else if (p && !t) ++c.fp;
            else if (!p && !t) ++c.tn;
            else ++c.fn;
        }
    return c;
}

namespace detail {

inline std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return double(num) / double(den);
}

}  // namespace detail

inline std::optional<double> precision(const PairCounts& c) {
    return detail::ratio(c.tp, c.tp + c.fp);
}
inline std::optional<double> recall(const PairCounts& c) {
    return detail::ratio(c.tp, c.tp + c.fn);
}
inline std::optional<double> true_negative_rate(const PairCounts& c) {
    return detail::ratio(c.tn, c.tn + c.fp);
}
inline std::optional<double> accuracy(const PairCounts& c) {
    return detail::ratio(c.tp + c.tn, c.total());
}

// Kendall's tau-b over unordered pairs: (C - D) / sqrt((C+D+Tp)(C+D+Tt))
// where Tp counts pairs tied only in `pred` and Tt pairs tied only in
// `truth`. A fully tied vector zeroes a denominator factor -> absent.
inline std::optional<double> kendall_tau(const std::vector<double>& pred,
                                         const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw ShapeError("kendall_tau: length mismatch");
    if (pred.size() < 2) throw UsageError("kendall_tau: needs at least two entries");
    std::uint64_t concordant = 0, discordant = 0, tie_pred = 0, tie_truth = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            const double dp = pred[i] - pred[j];
            const double dt = truth[i] - truth[j];
            if (dp == 0.0 && dt == 0.0) continue;  // tied in both: drops out
            if (dp == 0.0) ++tie_pred;
            else if (dt == 0.0) ++tie_truth;
            else if ((dp > 0.0) == (dt > 0.0)) ++concordant;
            else ++discordant;
        }
    const double lhs = double(concordant + discordant + tie_pred);
    const double rhs = double(concordant + discordant + tie_truth);
    if (lhs == 0.0 || rhs == 0.0) return std::nullopt;
    return (double(concordant) - double(discordant)) / std::sqrt(lhs * rhs);
}

// Per-centrality aggregation: unweighted means over graphs, with rates whose
// denominator vanished on a graph simply not contributing to that mean.
struct RateMean {
    double sum = 0.0;
    std::size_t count = 0;

    void add(std::optional<double> v) {
        if (!v) return;
        sum += *v;
        ++count;
    }
    std::optional<double> mean() const {
        if (count == 0) return std::nullopt;
        return sum / double(count);
    }
};

struct CentralityReport {
    std::optional<double> precision, recall, tn_rate, accuracy, kendall;
    std::size_t graphs = 0;  // graphs contributing to this centrality
};

struct MetricsReport {
    std::vector<std::pair<Measure, CentralityReport>> rows;  // kAllMeasures order
    std::size_t graphs = 0;  // graphs evaluated overall

    const CentralityReport& row(Measure m) const {
        for (const auto& [measure, rep] : rows)
            if (measure == m) return rep;
        throw UsageError(std::string("MetricsReport: no row for '") + measure_name(m) + "'");
    }

    // Mean accuracy across the reported centralities, when all are defined.
    std::optional<double> average_accuracy() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [measure, rep] : rows) {
            if (!rep.accuracy) return std::nullopt;
            sum += *rep.accuracy;
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / double(n);
    }
};

}  // namespace centrank
