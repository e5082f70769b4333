#pragma once
// Training protocol and evaluation: epoch/batch assembly with
// without-replacement sampling, disjoint-union batches, per-graph losses,
// metric aggregation, size sweeps, and model checkpointing.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "centrank/dataset.hpp"
#include "centrank/error.hpp"
#include "centrank/gnn.hpp"
#include "centrank/heads.hpp"
#include "centrank/metrics.hpp"
#include "centrank/optim.hpp"
#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"

namespace centrank {

struct TrainConfig {
    std::size_t d = 64;
    std::size_t t_max = 32;
    std::size_t epochs = 32;
    std::size_t batches_per_epoch = 32;
    std::size_t batch_size = 32;
    HeadMode mode = HeadMode::RN;
    std::vector<Measure> centralities = {Measure::Degree, Measure::Betweenness,
                                         Measure::Closeness, Measure::Eigenvector};
    bool multitask = true;
    std::uint64_t seed = 0;
    AdamConfig adam;
};

inline void validate_config(const TrainConfig& c) {
    if (c.d < 2) throw ConfigError("train: d must be at least 2");
    if (c.t_max == 0) throw ConfigError("train: t_max must be positive");
    if (c.batch_size == 0 || c.batches_per_epoch == 0)
        throw ConfigError("train: batch shape must be positive");
    for (std::size_t i = 0; i < c.centralities.size(); ++i)
        for (std::size_t j = i + 1; j < c.centralities.size(); ++j)
            if (c.centralities[i] == c.centralities[j])
                throw ConfigError("train: duplicate centrality in config");
    if (c.multitask && c.centralities.size() != std::size(kAllMeasures))
        throw ConfigError("train: multitask requires all four centralities");
    if (!c.multitask && c.centralities.size() != 1)
        throw ConfigError("train: single-task requires exactly one centrality");
}

struct EpochLog {
    std::size_t epoch = 0;
    std::map<Measure, double> mean_loss;  // mean per-member loss over the epoch
    double seconds = 0.0;                 // wall clock, not part of any payload file
    std::optional<double> probe_accuracy;
};

struct TrainedModel {
    TrainConfig config;
    ParamStore store;
    GnnParams gnn;
    HeadParams head;
    std::size_t epochs_done = 0;
    std::vector<EpochLog> logs;
};

inline TrainedModel init_model(const TrainConfig& cfg) {
    TrainedModel m;
    m.config = cfg;
    m.gnn = init_gnn_params(m.store, cfg.d, cfg.t_max, derive_seed(cfg.seed, 0));
    m.head = init_head_params(m.store, cfg.mode, cfg.centralities, cfg.d,
                              derive_seed(cfg.seed, 1));
    return m;
}

namespace detail {

// Loss for one member graph of a batch under the configured regime. AU is
// the only mode needing raw targets, which the sidecars don't carry; they
// are recomputed from the graph on the fly.
inline Tensor member_loss(HeadMode mode, const HeadParams& head, const Tensor& v_member,
                          const Instance& inst, Measure m) {
    const std::vector<double>& vals = inst.values[std::size_t(m)];
    switch (mode) {
        case HeadMode::RN: {
            CentralityVector cv{m, vals, true};
            return rn_loss(cmp_forward(head, m, v_member), rank_label_matrix(cv));
        }
        case HeadMode::AN:
            return an_loss(approx_forward(head, m, v_member), CentralityVector{m, vals, true});
        case HeadMode::AU:
            return au_loss(approx_forward(head, m, v_member), centrality(inst.graph, m, false));
        case HeadMode::AM:
            return am_loss(approx_forward(head, m, v_member), CentralityVector{m, vals, true});
    }
    throw UsageError("member_loss: bad mode");
}

inline std::vector<double> column(const Tensor& t) {
    return t.data();  // [n, 1] row-major is already the column
}

// Scores for ranking the comparator's output: how many vertices each column
// vertex is predicted to outrank (its column sum).
inline std::vector<double> copeland_scores(const LabelMatrix& m) {
    std::vector<double> s(m.n, 0.0);
    for (VertexId i = 0; i < m.n; ++i)
        for (VertexId j = 0; j < m.n; ++j)
            if (m.at(i, j)) s[j] += 1.0;
    return s;
}

}  // namespace detail

// The instance order an epoch consumes: a full permutation keyed on
// (seed, epoch), so batches drawn from its front never repeat an index
// within the epoch and an interrupted run resumes identically.
inline std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch,
                                            std::size_t dataset_size) {
    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 2, epoch));
    rng.shuffle(order);
    return order;
}

// Evaluation over a dataset: per graph and centrality, compare the model's
// pairwise decisions against the exact ranking; aggregate rates as
// unweighted means over graphs. Targets with non-finite entries (real
// networks whose eigenvector iteration failed) are skipped for that
// centrality. `threads` parallelizes over graphs with a deterministic merge.
inline MetricsReport evaluate(const GnnParams& gnn, const HeadParams& head,
                              const Dataset& ds, std::size_t threads = 1) {
    struct Cell {
        bool present = false;
        std::optional<double> precision, recall, tn_rate, accuracy, kendall;
    };
    const std::size_t n_inst = ds.instances.size();
    const std::size_t n_cent = head.centralities.size();
    std::vector<Cell> cells(n_inst * n_cent);

    auto eval_one = [&](std::size_t idx) {
        const Instance& inst = ds.instances[idx];
        const Tensor v = message_passing_run(inst.graph, gnn);
        for (std::size_t c = 0; c < n_cent; ++c) {
            const Measure m = head.centralities[c];
            const std::vector<double>& truth_vals = inst.values[std::size_t(m)];
            bool finite = true;
            for (double t : truth_vals)
                if (!std::isfinite(t)) finite = false;
            if (!finite) continue;

            const LabelMatrix truth = rank_label_matrix(CentralityVector{m, truth_vals, true});
            LabelMatrix pred;
            std::vector<double> scores;
            if (head.mode == HeadMode::RN) {
                pred = binarize_comparison(cmp_forward(head, m, v));
                scores = detail::copeland_scores(pred);
            } else {
                scores = detail::column(approx_forward(head, m, v));
                pred = comparison_from_scores(scores);
            }
            const PairCounts counts = pair_counts(pred, truth);
            Cell& cell = cells[idx * n_cent + c];
            cell.present = true;
            cell.precision = precision(counts);
            cell.recall = recall(counts);
            cell.tn_rate = true_negative_rate(counts);
            cell.accuracy = accuracy(counts);
            cell.kendall = kendall_tau(scores, truth_vals);
        }
    };

    if (threads <= 1 || n_inst <= 1) {
        for (std::size_t i = 0; i < n_inst; ++i) eval_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t i = next.fetch_add(1); i < n_inst; i = next.fetch_add(1))
                eval_one(i);
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, n_inst); ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    MetricsReport report;
    report.graphs = n_inst;
    for (std::size_t c = 0; c < n_cent; ++c) {
        RateMean mp, mr, mt, ma, mk;
        std::size_t graphs = 0;
        for (std::size_t i = 0; i < n_inst; ++i) {
            const Cell& cell = cells[i * n_cent + c];
            if (!cell.present) continue;
            ++graphs;
            mp.add(cell.precision);
            mr.add(cell.recall);
            mt.add(cell.tn_rate);
            ma.add(cell.accuracy);
            mk.add(cell.kendall);
        }
        CentralityReport rep;
        rep.graphs = graphs;
        rep.precision = mp.mean();
        rep.recall = mr.mean();
        rep.tn_rate = mt.mean();
        rep.accuracy = ma.mean();
        rep.kendall = mk.mean();
        report.rows.push_back({head.centralities[c], rep});
    }
    return report;
}

// Runs epochs [model.epochs_done, until_epoch). Batches are sampled without
// replacement within an epoch (fresh permutation per epoch keyed on the
// epoch index, so an interrupted run resumes on the identical trajectory).
inline void train_epochs(TrainedModel& model, const Dataset& ds, std::size_t until_epoch,
                         const Dataset* probe = nullptr) {
    const TrainConfig& cfg = model.config;
    if (ds.instances.empty()) throw ConfigError("train: dataset is empty");
    const std::size_t need = cfg.batch_size * cfg.batches_per_epoch;
    if (need > ds.instances.size())
        throw ConfigError("train: an epoch draws " + std::to_string(need) +
                          " instances without replacement but the dataset has only " +
                          std::to_string(ds.instances.size()));

    for (std::size_t e = model.epochs_done; e < until_epoch; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<std::size_t> order = epoch_order(cfg.seed, e, ds.instances.size());

        std::map<Measure, double> loss_sums;
        for (Measure m : cfg.centralities) loss_sums[m] = 0.0;

        for (std::size_t b = 0; b < cfg.batches_per_epoch; ++b) {
            std::vector<Graph> graphs;
            graphs.reserve(cfg.batch_size);
            for (std::size_t k = 0; k < cfg.batch_size; ++k)
                graphs.push_back(ds.instances[order[b * cfg.batch_size + k]].graph);
            BatchedGraph batch = disjoint_union(graphs);
            Tensor v = message_passing_run(batch.union_graph, model.gnn);

            // Mean over members per centrality, summed across centralities.
            std::optional<Tensor> total;
            for (Measure m : cfg.centralities) {
                std::optional<Tensor> per_c;
                for (std::size_t k = 0; k < cfg.batch_size; ++k) {
                    const Instance& inst = ds.instances[order[b * cfg.batch_size + k]];
                    Tensor vm = slice_rows(v, batch.offsets[k],
                                           batch.offsets[k] + inst.graph.n);
                    Tensor lk = detail::member_loss(cfg.mode, model.head, vm, inst, m);
                    per_c = per_c ? add(*per_c, lk) : lk;
                }
                Tensor mean_c = scale(*per_c, 1.0 / double(cfg.batch_size));
                loss_sums[m] += mean_c.item();
                total = total ? add(*total, mean_c) : mean_c;
            }

            if (!std::isfinite(total->item()))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(e) +
                                   ", batch " + std::to_string(b));
            total->backward();
            adam_step(model.store, cfg.adam);
        }

        EpochLog log;
        log.epoch = e;
        for (auto& [m, sum] : loss_sums)
            log.mean_loss[m] = sum / double(cfg.batches_per_epoch);
        if (probe && !probe->instances.empty()) {
            Dataset slice;
            slice.name = probe->name;
            const std::size_t take = std::min<std::size_t>(32, probe->instances.size());
            slice.instances.assign(probe->instances.begin(),
                                   probe->instances.begin() + std::ptrdiff_t(take));
            log.probe_accuracy = evaluate(model.gnn, model.head, slice).average_accuracy();
        }
        log.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        model.logs.push_back(log);
        model.epochs_done = e + 1;
    }
}

inline TrainedModel train(const TrainConfig& cfg, const Dataset& ds,
                          const Dataset* probe = nullptr) {
    validate_config(cfg);
    TrainedModel model = init_model(cfg);
    train_epochs(model, ds, cfg.epochs, probe);
    return model;
}

// ---- model checkpoints -------------------------------------------------

inline void save_model(const std::filesystem::path& path, const TrainedModel& model) {
    nlohmann::json meta;
    meta["d"] = model.config.d;
    meta["t_max"] = model.config.t_max;
    meta["mode"] = head_mode_name(model.config.mode);
    nlohmann::json cents = nlohmann::json::array();
    for (Measure m : model.config.centralities) cents.push_back(measure_name(m));
    meta["centralities"] = cents;
    meta["multitask"] = model.config.multitask;
    meta["seed"] = model.config.seed;
    meta["epochs"] = model.config.epochs;
    meta["batches_per_epoch"] = model.config.batches_per_epoch;
    meta["batch_size"] = model.config.batch_size;
    meta["learning_rate"] = model.config.adam.lr;
    meta["epochs_done"] = model.epochs_done;
    save_checkpoint(path, model.store, meta);
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    TrainConfig cfg;
    std::size_t epochs_done = 0;
    try {
        cfg.d = ck.meta.at("d").get<std::size_t>();
        cfg.t_max = ck.meta.at("t_max").get<std::size_t>();
        cfg.mode = head_mode_from_name(ck.meta.at("mode").get<std::string>());
        cfg.centralities.clear();
        for (const auto& name : ck.meta.at("centralities"))
            cfg.centralities.push_back(measure_from_name(name.get<std::string>()));
        cfg.multitask = ck.meta.at("multitask").get<bool>();
        cfg.seed = ck.meta.at("seed").get<std::uint64_t>();
        cfg.epochs = ck.meta.at("epochs").get<std::size_t>();
        cfg.batches_per_epoch = ck.meta.at("batches_per_epoch").get<std::size_t>();
        cfg.batch_size = ck.meta.at("batch_size").get<std::size_t>();
        cfg.adam.lr = ck.meta.at("learning_rate").get<double>();
        epochs_done = ck.meta.at("epochs_done").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint meta: ") + e.what());
    }
    TrainedModel model = init_model(cfg);
    restore_params(model.store, ck);
    model.epochs_done = epochs_done;
    return model;
}

// ---- size sweep ---------------------------------------------------------

struct SizeBucket {
    VertexId n = 0;
    std::size_t count = 0;
    MetricsReport report;
};

// Evaluate per vertex-count bucket, ascending; empty buckets can't occur
// (they simply don't appear in the grouping).
inline std::vector<SizeBucket> sizes_sweep(const GnnParams& gnn, const HeadParams& head,
                                           const Dataset& ds, std::size_t threads = 1) {
    std::map<VertexId, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.instances.size(); ++i)
        groups[ds.instances[i].graph.n].push_back(i);
    std::vector<SizeBucket> out;
    for (const auto& [n, idxs] : groups) {
        Dataset sub;
        sub.name = ds.name;
        for (std::size_t i : idxs) sub.instances.push_back(ds.instances[i]);
        SizeBucket bucket;
        bucket.n = n;
        bucket.count = idxs.size();
        bucket.report = evaluate(gnn, head, sub, threads);
        out.push_back(std::move(bucket));
    }
    return out;
}

// ---- artifact emission ---------------------------------------------------

namespace detail {

inline std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

}  // namespace detail

// Aligned text table with one row per centrality plus an average row.
inline std::string metrics_table(const MetricsReport& report) {
    std::ostringstream out;
    auto row = [&](const std::string& name, const std::string& p, const std::string& r,
                   const std::string& t, const std::string& a, const std::string& k,
                   const std::string& g) {
        out << name;
        for (std::size_t pad = name.size(); pad < 14; ++pad) out << ' ';
        for (const std::string* col : {&p, &r, &t, &a, &k, &g}) {
            for (std::size_t pad = col->size(); pad < 10; ++pad) out << ' ';
            out << *col;
        }
        out << '\n';
    };
    row("centrality", "precision", "recall", "true-neg", "accuracy", "kendall", "graphs");
    RateMean acc_mean;
    for (const auto& [m, rep] : report.rows) {
        row(measure_name(m), detail::fmt_opt(rep.precision), detail::fmt_opt(rep.recall),
            detail::fmt_opt(rep.tn_rate), detail::fmt_opt(rep.accuracy),
            detail::fmt_opt(rep.kendall), std::to_string(rep.graphs));
        acc_mean.add(rep.accuracy);
    }
    row("average", "-", "-", "-", detail::fmt_opt(acc_mean.mean()), "-",
        std::to_string(report.graphs));
    return out.str();
}

// One JSON record per centrality, newline-delimited, keys sorted.
inline std::string metrics_records(const std::string& dataset_name,
                                   const MetricsReport& report) {
    std::ostringstream out;
    for (const auto& [m, rep] : report.rows) {
        nlohmann::json rec;
        rec["dataset"] = dataset_name;
        rec["centrality"] = measure_name(m);
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) rec[key] = *v;
            else rec[key] = nullptr;
        };
        put("precision", rep.precision);
        put("recall", rep.recall);
        put("true_negative_rate", rep.tn_rate);
        put("accuracy", rep.accuracy);
        put("kendall_tau", rep.kendall);
        rec["graphs"] = rep.graphs;
        out << rec.dump() << '\n';
    }
    return out.str();
}

// CSV of the per-size accuracies, one row per bucket.
inline std::string sizes_csv(const std::vector<SizeBucket>& buckets,
                             const std::vector<Measure>& centralities) {
    std::ostringstream out;
    out << "n,count";
    for (Measure m : centralities) out << ",accuracy_" << measure_name(m);
    out << '\n';
    for (const SizeBucket& b : buckets) {
        out << b.n << ',' << b.count;
        for (Measure m : centralities) out << ',' << detail::fmt_opt(b.report.row(m).accuracy);
        out << '\n';
    }
    return out.str();
}

// CSV of the per-epoch losses and probe accuracy. Wall-clock seconds stay
// out of this payload so reruns are byte-identical.
inline std::string epoch_log_csv(const std::vector<EpochLog>& logs,
                                 const std::vector<Measure>& centralities,
                                 bool header = true) {
    std::ostringstream out;
    if (header) {
        out << "epoch";
        for (Measure m : centralities) out << ",loss_" << measure_name(m);
        out << ",probe_accuracy\n";
    }
    for (const EpochLog& log : logs) {
        out << log.epoch;
        for (Measure m : centralities) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.9g", log.mean_loss.at(m));
            out << ',' << buf;
        }
        out << ',' << detail::fmt_opt(log.probe_accuracy) << '\n';
    }
    return out.str();
}

}  // namespace centrank
