#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "centrank/config.hpp"
#include "centrank/dataset.hpp"
#include "centrank/error.hpp"
#include "centrank/gnn.hpp"
#include "centrank/pca.hpp"
#include "centrank/train.hpp"

namespace centrank {

// Command-line operator interface. Exit codes are a stable contract:
//   0 success, 1 runtime/numeric failure, 2 usage or configuration error.
// Every command is deterministic given its config and seed; payload files
// (datasets, checkpoints, CSV/ndjson artifacts) never embed timestamps.

namespace cli_detail {

namespace fs = std::filesystem;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
};

inline void add_global_flags(CLI::App* cmd, GlobalOpts& opts) {
    cmd->add_option("--seed", opts.seed, "Base random seed (default 0)");
    cmd->add_option("--threads", opts.threads, "Worker threads; 1 is the deterministic mode")
        ->check(CLI::Range(1u, 1024u));
    cmd->add_option("--out-dir", opts.out_dir, "Directory for outputs (default '.')");
}

inline std::uint64_t merge_seed(const GlobalOpts& flags, const RunSection& run,
                                std::optional<std::uint64_t> section_seed = std::nullopt) {
    if (flags.seed) return *flags.seed;
    if (section_seed) return *section_seed;
    if (run.seed) return *run.seed;
    return 0;
}

inline unsigned merge_threads(const GlobalOpts& flags, const RunSection& run) {
    if (flags.threads) return *flags.threads;
    if (run.threads) return *run.threads;
    return 1;
}

inline fs::path merge_out_dir(const GlobalOpts& flags, const RunSection& run,
                              const IniDoc* doc) {
    if (flags.out_dir) return fs::path(*flags.out_dir);
    if (run.out_dir && doc) return doc->resolve(*run.out_dir);
    if (run.out_dir) return fs::path(*run.out_dir);
    return fs::path(".");
}

inline void write_text_file(const fs::path& path, const std::string& content) {
    const fs::path parent = path.parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
        if (ec) throw IoError("cannot create directory " + parent.string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write to " + path.string());
}

inline void append_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to " + path.string());
    out << content;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Oracle that tolerates per-measure failure (eigenvector iteration may not
// converge on arbitrary real networks); a refused measure is stored as NaN
// and reported, not fatal.
inline std::array<std::vector<double>, 4> tolerant_centralities(
    const Graph& g, std::vector<std::string>* notes) {
    std::array<std::vector<double>, 4> values;
    for (std::size_t c = 0; c < std::size(kAllMeasures); ++c) {
        const Measure m = kAllMeasures[c];
        try {
            values[c] = centrality(g, m, true).values;
        } catch (const ConvergenceError& e) {
            values[c].assign(g.n, std::numeric_limits<double>::quiet_NaN());
            if (notes)
                notes->push_back(std::string(measure_name(m)) + " marked absent: " + e.what());
        } catch (const InputError& e) {
            values[c].assign(g.n, std::numeric_limits<double>::quiet_NaN());
            if (notes)
                notes->push_back(std::string(measure_name(m)) + " marked absent: " + e.what());
        }
    }
    return values;
}

inline EdgeListFormat format_from_flag(const std::string& flag) {
    if (flag == "snap") return EdgeListFormat::SnapEdgeList;
    if (flag == "matrix-market" || flag == "mtx") return EdgeListFormat::MatrixMarket;
    throw ConfigError("unknown --format '" + flag + "' (expected snap or matrix-market)");
}

inline TrainedModel load_model_checked(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    return load_model(path);
}

inline Dataset load_dataset_checked(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json"))
        throw ConfigError("dataset not found: " + dir.string() +
                          " (missing manifest.json)");
    return load_dataset(dir);
}

// ---- generate -----------------------------------------------------------------

inline int cmd_generate(const std::string& config_path, const GlobalOpts& flags,
                        std::ostream& out) {
    const IniDoc doc = load_ini(config_path);
    enforce_schema(doc, run_config_schema());
    const RunSection run = run_section(doc);
    const GenerateSection gen = generate_section(doc);

    const std::uint64_t seed = merge_seed(flags, run);
    const unsigned threads = merge_threads(flags, run);
    const fs::path out_dir = merge_out_dir(flags, run, &doc);

    const std::vector<GeneratorSpec> specs = materialize_specs(gen, seed);
    Dataset ds = generate_dataset(specs, exact_centralities, threads);
    ds.name = gen.name ? *gen.name : (gen.preset ? *gen.preset : "custom");

    const fs::path dir = out_dir / ds.name;
    save_dataset(dir, ds);

    std::size_t edges = 0;
    for (const Instance& inst : ds.instances) edges += inst.graph.edge_count();
    out << "dataset '" << ds.name << "': " << ds.instances.size() << " instances, " << edges
        << " edges\n";
    for (const GeneratorSpec& s : specs)
        out << "  " << s.identity() << " -> " << s.count << " instances\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
}

// ---- train --------------------------------------------------------------------

inline int cmd_train(const std::string& config_path, const GlobalOpts& flags,
                     std::ostream& out) {
    const IniDoc doc = load_ini(config_path);
    enforce_schema(doc, run_config_schema());
    const RunSection run = run_section(doc);
    const TrainSection ts = train_section(doc);

    TrainConfig cfg = ts.config;
    cfg.seed = merge_seed(flags, run, ts.seed);
    validate_config(cfg);

    const Dataset ds = load_dataset_checked(doc.resolve(ts.dataset));
    std::optional<Dataset> probe;
    if (ts.probe) probe = load_dataset_checked(doc.resolve(*ts.probe));

    const fs::path out_dir = merge_out_dir(flags, run, &doc);
    const fs::path ck_path = out_dir / ts.checkpoint;
    const fs::path log_path = out_dir / ts.epoch_log;

    TrainedModel model;
    bool resumed = false;
    std::size_t first_epoch = 1;
    if (ts.resume && fs::exists(ck_path)) {
        model = load_model(ck_path);
        const TrainConfig& old = model.config;
        if (old.d != cfg.d || old.t_max != cfg.t_max || old.mode != cfg.mode ||
            old.centralities != cfg.centralities || old.multitask != cfg.multitask ||
            old.seed != cfg.seed || old.batches_per_epoch != cfg.batches_per_epoch ||
            old.batch_size != cfg.batch_size || old.adam.lr != cfg.adam.lr) {
            throw ConfigError("resume: checkpoint " + ck_path.string() +
                              " was trained with a different configuration");
        }
        resumed = true;
        first_epoch = model.epochs_done + 1;
        model.config.epochs = cfg.epochs;
        if (model.epochs_done >= cfg.epochs) {
            out << "checkpoint already at epoch " << model.epochs_done << ", nothing to do\n";
        } else {
            train_epochs(model, ds, cfg.epochs, probe ? &*probe : nullptr);
        }
    } else {
        model = train(cfg, ds, probe ? &*probe : nullptr);
    }

    const fs::path ck_parent = ck_path.parent_path();
    if (!ck_parent.empty()) {
        std::error_code ec;
        fs::create_directories(ck_parent, ec);
        if (ec) throw IoError("cannot create directory " + ck_parent.string());
    }
    save_model(ck_path, model);
    const bool append = resumed && fs::exists(log_path);
    const std::string log_text = epoch_log_csv(model.logs, cfg.centralities, !append);
    if (append) {
        append_text_file(log_path, log_text);
    } else {
        write_text_file(log_path, log_text);
    }

    out << "trained epochs " << first_epoch << ".." << model.epochs_done << " (d=" << cfg.d
        << ", t_max=" << cfg.t_max << ", mode=" << head_mode_name(cfg.mode) << ")\n";
    if (!model.logs.empty() && model.logs.back().probe_accuracy) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *model.logs.back().probe_accuracy);
        out << "final probe accuracy: " << buf << "\n";
    } else {
        out << "final probe accuracy: n/a\n";
    }
    out << "wrote " << ck_path.string() << "\n";
    out << "wrote " << log_path.string() << "\n";
    return 0;
}

// ---- eval ---------------------------------------------------------------------

inline int cmd_eval(const std::string& checkpoint, const std::string& dataset,
                    std::optional<std::size_t> d_flag, std::optional<std::size_t> t_max_flag,
                    bool sizes, const GlobalOpts& flags, std::ostream& out) {
    const TrainedModel model = load_model_checked(checkpoint);
    if (d_flag && *d_flag != model.config.d)
        throw ConfigError("--d " + std::to_string(*d_flag) + " disagrees with checkpoint (d=" +
                          std::to_string(model.config.d) + ")");
    if (t_max_flag && *t_max_flag != model.config.t_max)
        throw ConfigError("--t-max " + std::to_string(*t_max_flag) +
                          " disagrees with checkpoint (t_max=" +
                          std::to_string(model.config.t_max) + ")");

    const Dataset ds = load_dataset_checked(dataset);
    const unsigned threads = flags.threads ? *flags.threads : 1;
    const fs::path out_dir = flags.out_dir ? fs::path(*flags.out_dir) : fs::path(".");

    const MetricsReport report = evaluate(model.gnn, model.head, ds, threads);
    const std::string table = metrics_table(report);
    out << table;
    write_text_file(out_dir / "metrics.txt", table);
    write_text_file(out_dir / "metrics.ndjson", metrics_records(ds.name, report));
    out << "wrote " << (out_dir / "metrics.txt").string() << "\n";
    out << "wrote " << (out_dir / "metrics.ndjson").string() << "\n";

    if (sizes) {
        const auto buckets = sizes_sweep(model.gnn, model.head, ds, threads);
        write_text_file(out_dir / "sizes.csv", sizes_csv(buckets, model.head.centralities));
        out << "wrote " << (out_dir / "sizes.csv").string() << " (" << buckets.size()
            << " size buckets)\n";
    }
    return 0;
}

// ---- ingest-real --------------------------------------------------------------

inline int cmd_ingest_real(const std::vector<std::string>& files, const std::string& format,
                           const GlobalOpts& flags, std::ostream& out) {
    std::optional<EdgeListFormat> forced;
    if (!format.empty()) forced = format_from_flag(format);

    const fs::path out_dir = flags.out_dir ? fs::path(*flags.out_dir) : fs::path(".");
    const fs::path real_dir = out_dir / "real";

    Dataset ds;
    if (fs::exists(real_dir / "manifest.json")) {
        ds = load_dataset(real_dir);
    } else {
        ds.name = "real";
    }

    for (const std::string& file : files) {
        const fs::path path(file);
        if (!fs::exists(path)) throw ConfigError("input file not found: " + path.string());

        std::vector<std::string> notes;
        double oracle_seconds = 0.0;
        OracleHook timed = [&](const Graph& g) {
            const auto t0 = std::chrono::steady_clock::now();
            auto values = tolerant_centralities(g, &notes);
            oracle_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return values;
        };
        Dataset one = ingest_real({path}, timed, forced);
        const Instance& inst = one.instances.front();
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.2f", oracle_seconds);
        out << path.filename().string() << ": n=" << inst.graph.n
            << ", edges=" << inst.graph.edge_count() << ", oracle " << secs << "s\n";
        for (const std::string& note : notes) out << "  warning: " << note << "\n";
        ds.instances.push_back(inst);
        ds.provenance_files.push_back(one.provenance_files.front());
    }

    save_dataset(real_dir, ds);
    out << "real dataset now holds " << ds.instances.size() << " instances at "
        << real_dir.string() << "\n";
    return 0;
}

// ---- pca ----------------------------------------------------------------------

inline int cmd_pca(const std::string& checkpoint, const std::string& graph_file,
                   const std::string& format, const GlobalOpts& flags, std::ostream& out) {
    const TrainedModel model = load_model_checked(checkpoint);

    const fs::path gpath(graph_file);
    if (!fs::exists(gpath)) throw ConfigError("graph file not found: " + gpath.string());
    std::optional<EdgeListFormat> forced;
    if (!format.empty()) forced = format_from_flag(format);
    EdgeListFormat fmt;
    if (forced) {
        fmt = *forced;
    } else if (gpath.extension() == ".mtx") {
        fmt = EdgeListFormat::MatrixMarket;
    } else if (gpath.extension() == ".txt" || gpath.extension() == ".edges" ||
               gpath.extension() == ".el") {
        fmt = EdgeListFormat::SnapEdgeList;
    } else {
        throw ConfigError("unsupported edge-list extension '" + gpath.extension().string() +
                          "' for " + gpath.string() + " (use --format)");
    }
    std::ifstream in(gpath, std::ios::binary);
    if (!in) throw IoError("cannot open " + gpath.string());
    const Graph g = parse_edge_list(in, fmt);

    std::vector<std::string> notes;
    const auto values = tolerant_centralities(g, &notes);

    std::ostringstream csv;
    csv << "step,vertex,projection,degree,betweenness,closeness,eigenvector\n";
    std::vector<std::size_t> degenerate_steps;

    auto emit_row = [&](std::size_t step, VertexId v, double projection) {
        csv << step << ',' << v << ',' << fmt_double(projection);
        for (std::size_t c = 0; c < 4; ++c) csv << ',' << fmt_double(values[c][v]);
        csv << '\n';
    };

    if (g.n < 2) {
        // A single vertex has no direction to project onto; every step is the
        // degenerate midpoint.
        for (std::size_t step = 0; step <= model.config.t_max; ++step) {
            degenerate_steps.push_back(step);
            emit_row(step, 0, 0.5);
        }
    } else {
        const std::vector<double> orient = centrality(g, Measure::Degree, false).values;
        const std::vector<Tensor> trace = message_passing_trace(adjacency(g), model.gnn);
        for (std::size_t step = 0; step < trace.size(); ++step) {
            const PcaResult r = pca_1d(trace[step], orient);
            if (r.degenerate) degenerate_steps.push_back(step);
            for (VertexId v = 0; v < g.n; ++v) emit_row(step, v, r.projection[v]);
        }
    }

    const fs::path out_dir = flags.out_dir ? fs::path(*flags.out_dir) : fs::path(".");
    write_text_file(out_dir / "pca.csv", csv.str());

    for (const std::string& note : notes) out << "warning: " << note << "\n";
    if (g.n < 2) out << "warning: single-vertex graph, projection is degenerate at every step\n";
    for (std::size_t step : degenerate_steps)
        out << "step " << step << ": degenerate projection (all embeddings identical)\n";
    out << "wrote " << (out_dir / "pca.csv").string() << " (" << (model.config.t_max + 1)
        << " steps x " << g.n << " vertices)\n";
    return 0;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    using namespace cli_detail;

    CLI::App app{"centrank: learn to rank vertices by centrality from graph structure alone"};
    app.require_subcommand(1);

    std::string gen_config;
    GlobalOpts gen_flags;
    CLI::App* gen = app.add_subcommand("generate", "Build a synthetic dataset from a config");
    gen->add_option("--config", gen_config, "Run configuration file")->required();
    add_global_flags(gen, gen_flags);

    std::string train_config;
    GlobalOpts train_flags;
    CLI::App* tr = app.add_subcommand("train", "Train a model per the config");
    tr->add_option("--config", train_config, "Run configuration file")->required();
    add_global_flags(tr, train_flags);

    std::string eval_ck, eval_ds;
    std::optional<std::size_t> eval_d, eval_t_max;
    bool eval_sizes = false;
    GlobalOpts eval_flags;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", eval_ck, "Model checkpoint")->required();
    ev->add_option("--dataset", eval_ds, "Dataset directory")->required();
    ev->add_option("--d", eval_d, "Cross-check embedding width against the checkpoint");
    ev->add_option("--t-max", eval_t_max, "Cross-check step count against the checkpoint");
    ev->add_flag("--sizes", eval_sizes, "Also emit per-vertex-count accuracy CSV");
    add_global_flags(ev, eval_flags);

    std::vector<std::string> ingest_files;
    std::string ingest_format;
    GlobalOpts ingest_flags;
    CLI::App* ing = app.add_subcommand("ingest-real", "Add real network files to the 'real' dataset");
    ing->add_option("files", ingest_files, "Edge-list files (.txt/.edges/.el snap, .mtx matrix-market)")
        ->required();
    ing->add_option("--format", ingest_format, "Force input format: snap or matrix-market");
    add_global_flags(ing, ingest_flags);

    std::string pca_ck, pca_graph, pca_format;
    GlobalOpts pca_flags;
    CLI::App* pc = app.add_subcommand("pca", "Emit per-step 1-D embedding projections for a graph");
    pc->add_option("--checkpoint", pca_ck, "Model checkpoint")->required();
    pc->add_option("--graph", pca_graph, "Edge-list file")->required();
    pc->add_option("--format", pca_format, "Force input format: snap or matrix-market");
    add_global_flags(pc, pca_flags);

    try {
        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("centrank");
        for (const std::string& a : args) argv.push_back(a.c_str());
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(gen)) return cmd_generate(gen_config, gen_flags, out);
        if (app.got_subcommand(tr)) return cmd_train(train_config, train_flags, out);
        if (app.got_subcommand(ev))
            return cmd_eval(eval_ck, eval_ds, eval_d, eval_t_max, eval_sizes, eval_flags, out);
        if (app.got_subcommand(ing))
            return cmd_ingest_real(ingest_files, ingest_format, ingest_flags, out);
        if (app.got_subcommand(pc))
            return cmd_pca(pca_ck, pca_graph, pca_format, pca_flags, out);
        err << "error: no command selected\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace centrank
