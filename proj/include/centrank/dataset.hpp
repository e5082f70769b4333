#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "centrank/centrality.hpp"
#include "centrank/error.hpp"
#include "centrank/generators.hpp"
#include "centrank/graph.hpp"
#include "centrank/rng.hpp"

namespace centrank {

enum class Family { ErdosRenyi, PowerlawTree, WattsStrogatz, HolmeKim, BarabasiAlbert, Shell };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::ErdosRenyi: return "erdos-renyi";
        case Family::PowerlawTree: return "powerlaw-tree";
        case Family::WattsStrogatz: return "watts-strogatz";
        case Family::HolmeKim: return "holme-kim";
        case Family::BarabasiAlbert: return "barabasi-albert";
        case Family::Shell: return "shell";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "erdos-renyi") return Family::ErdosRenyi;
    if (s == "powerlaw-tree") return Family::PowerlawTree;
    if (s == "watts-strogatz") return Family::WattsStrogatz;
    if (s == "holme-kim") return Family::HolmeKim;
    if (s == "barabasi-albert") return Family::BarabasiAlbert;
    if (s == "shell") return Family::Shell;
    throw ConfigError("unknown graph family '" + s + "'");
}

struct GeneratorSpec {
    Family family;
    std::map<std::string, double> params;
    VertexId n_lo = 0, n_hi = 0;  // inclusive vertex-count interval
    std::uint32_t count = 0;
    std::uint64_t seed = 0;

    std::string identity() const {
        std::string s = family_name(family);
        for (const auto& [k, v] : params) s += " " + k + "=" + std::to_string(v);
        s += " n=[" + std::to_string(n_lo) + "," + std::to_string(n_hi) + "]";
        s += " seed=" + std::to_string(seed);
        return s;
    }
};

inline void validate_spec(const GeneratorSpec& spec) {
    if (spec.count < 1) throw ConfigError("generator spec: count must be >= 1");
    if (spec.n_lo < 4) throw ConfigError("generator spec: n_range lower bound must be >= 4");
    if (spec.n_hi < spec.n_lo) throw ConfigError("generator spec: empty n_range");
    static const std::map<Family, std::vector<std::string>> required = {
        {Family::ErdosRenyi, {"p"}},
        {Family::PowerlawTree, {"gamma"}},
        {Family::WattsStrogatz, {"k", "p"}},
        {Family::HolmeKim, {"m", "p"}},
        {Family::BarabasiAlbert, {"m"}},
        {Family::Shell, {}},
    };
    static const std::map<Family, std::vector<std::string>> optional = {
        {Family::PowerlawTree, {"tries"}},
        {Family::WattsStrogatz, {"tries"}},
    };
    const auto& req = required.at(spec.family);
    for (const auto& name : req) {
        if (!spec.params.count(name)) {
            throw ConfigError(std::string("generator spec: family ") +
                              family_name(spec.family) + " requires parameter '" + name +
                              "'");
        }
    }
    for (const auto& [name, value] : spec.params) {
        (void)value;
        bool known = std::find(req.begin(), req.end(), name) != req.end();
        if (auto it = optional.find(spec.family); !known && it != optional.end()) {
            known = std::find(it->second.begin(), it->second.end(), name) != it->second.end();
        }
        if (!known) {
            throw ConfigError(std::string("generator spec: family ") +
                              family_name(spec.family) + " does not take parameter '" +
                              name + "'");
        }
    }
}

// One graph with exact values for all four measures, in kAllMeasures order
// (degree, betweenness, closeness, eigenvector), normalized forms.
struct Instance {
    Graph graph;
    std::array<std::vector<double>, 4> values;
};

struct Dataset {
    std::string name;  // train | test | large | different | sizes | real | custom
    std::vector<Instance> instances;
    std::vector<GeneratorSpec> provenance_specs;
    std::vector<std::string> provenance_files;
};

using OracleHook = std::function<std::array<std::vector<double>, 4>(const Graph&)>;

inline std::array<std::vector<double>, 4> exact_centralities(const Graph& g) {
    return {degree_centrality(g, true).values, betweenness_centrality(g, true).values,
            closeness_centrality(g, true).values, eigenvector_centrality(g).values};
}

namespace detail {

inline Graph generate_one(const GeneratorSpec& spec, VertexId n, Rng& rng) {
    auto param = [&](const std::string& k) { return spec.params.at(k); };
    switch (spec.family) {
        case Family::ErdosRenyi:
            return erdos_renyi(n, param("p"), rng);
        case Family::PowerlawTree: {
            const int tries =
                spec.params.count("tries") ? int(param("tries")) : 100;
            return powerlaw_tree(n, param("gamma"), rng, tries);
        }
        case Family::WattsStrogatz: {
            const int tries =
                spec.params.count("tries") ? int(param("tries")) : 100;
            return connected_watts_strogatz(n, VertexId(param("k")), param("p"), rng, tries);
        }
        case Family::HolmeKim:
            return holme_kim(n, VertexId(param("m")), param("p"), rng);
        case Family::BarabasiAlbert:
            return barabasi_albert(n, VertexId(param("m")), rng);
        case Family::Shell:
            return shell_graph(n);
    }
    throw UsageError("generate_one: bad family enum");
}

// Builds instance `index` of `spec`. Seeding is per (spec seed, index,
// attempt), so instances are independent of build order and an instance whose
// oracle rejects the draw (no edges; eigenvector non-convergence) retries on
// a fresh stream. Shell draws resample until the realized vertex count lands
// inside n_range.
inline Instance build_instance(const GeneratorSpec& spec, std::uint32_t index,
                               const OracleHook& oracle) {
    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(spec.seed, index, std::uint64_t(attempt)));
        const VertexId n = spec.n_lo + VertexId(rng.below(spec.n_hi - spec.n_lo + 1));
        Instance inst;
        try {
            inst.graph = generate_one(spec, n, rng);
        } catch (const GenerationError&) {
            continue;
        }
        if (inst.graph.n < spec.n_lo || inst.graph.n > spec.n_hi) continue;
        try {
            inst.values = oracle(inst.graph);
        } catch (const ConvergenceError&) {
            continue;
        } catch (const InputError&) {
            continue;  // e.g. an edgeless draw that the eigenvector oracle rejects
        }
        return inst;
    }
    throw GenerationError("dataset: instance " + std::to_string(index) + " of spec [" +
                          spec.identity() + "] failed after " +
                          std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace detail

inline Dataset generate_dataset(const std::vector<GeneratorSpec>& specs,
                                const OracleHook& oracle = exact_centralities,
                                unsigned threads = 1) {
    for (const auto& s : specs) validate_spec(s);
    std::vector<std::pair<std::size_t, std::uint32_t>> slots;  // (spec idx, instance idx)
    for (std::size_t s = 0; s < specs.size(); ++s)
        for (std::uint32_t i = 0; i < specs[s].count; ++i) slots.emplace_back(s, i);

    Dataset ds;
    ds.name = "custom";
    ds.provenance_specs = specs;
    ds.instances.resize(slots.size());

    if (threads <= 1) {
        for (std::size_t w = 0; w < slots.size(); ++w) {
            ds.instances[w] =
                detail::build_instance(specs[slots[w].first], slots[w].second, oracle);
        }
        return ds;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t w = next.fetch_add(1);
            if (w >= slots.size() || failed.load()) return;
            try {
                ds.instances[w] =
                    detail::build_instance(specs[slots[w].first], slots[w].second, oracle);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                failed = true;
                if (error_text.empty()) error_text = e.what();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed) throw GenerationError(error_text);
    return ds;
}

// --- Presets -----------------------------------------------------------------

namespace detail {

inline std::uint64_t preset_stream(const std::string& dataset) {
    if (dataset == "train") return 0;
    if (dataset == "test") return 1;
    if (dataset == "large") return 2;
    if (dataset == "different") return 3;
    if (dataset == "sizes") return 4;
    throw ConfigError("unknown dataset preset '" + dataset + "'");
}

inline GeneratorSpec family_spec(Family f, VertexId lo, VertexId hi, std::uint32_t count,
                                 std::uint64_t seed) {
    GeneratorSpec s;
    s.family = f;
    switch (f) {
        case Family::ErdosRenyi: s.params = {{"p", 0.25}}; break;
        case Family::PowerlawTree: s.params = {{"gamma", 3.0}}; break;
        case Family::WattsStrogatz: s.params = {{"k", 4.0}, {"p", 0.25}}; break;
        case Family::HolmeKim: s.params = {{"m", 4.0}, {"p", 0.1}}; break;
        case Family::BarabasiAlbert: s.params = {{"m", 4.0}}; break;
        case Family::Shell: s.params = {}; break;
    }
    s.n_lo = lo;
    s.n_hi = hi;
    s.count = count;
    s.seed = seed;
    return s;
}

}  // namespace detail

// The five synthetic dataset recipes. Counts: train/test 4096 per family;
// large 1024 per family (smaller, as the larger graphs already dominate the
// oracle budget); different 4096 per family; sizes 128 per (size, family).
inline std::vector<GeneratorSpec> preset_specs(const std::string& dataset,
                                               std::uint64_t base_seed,
                                               std::uint32_t count_override = 0) {
    const std::uint64_t stream = detail::preset_stream(dataset);
    const std::uint64_t root = derive_seed(base_seed, stream);
    auto pick = [&](std::uint32_t preset_count) {
        return count_override ? count_override : preset_count;
    };
    const std::vector<Family> train_families = {Family::ErdosRenyi, Family::PowerlawTree,
                                                Family::WattsStrogatz, Family::HolmeKim};
    std::vector<GeneratorSpec> specs;
    if (dataset == "train" || dataset == "test") {
        for (std::size_t f = 0; f < train_families.size(); ++f) {
            specs.push_back(detail::family_spec(train_families[f], 32, 128, pick(4096),
                                                derive_seed(root, f)));
        }
    } else if (dataset == "large") {
        for (std::size_t f = 0; f < train_families.size(); ++f) {
            specs.push_back(detail::family_spec(train_families[f], 128, 512, pick(1024),
                                                derive_seed(root, f)));
        }
    } else if (dataset == "different") {
        specs.push_back(detail::family_spec(Family::BarabasiAlbert, 32, 128, pick(4096),
                                            derive_seed(root, 0)));
        specs.push_back(
            detail::family_spec(Family::Shell, 32, 128, pick(4096), derive_seed(root, 1)));
    } else if (dataset == "sizes") {
        std::uint64_t k = 0;
        for (VertexId size = 32; size <= 256; size += 16) {
            for (Family f : train_families) {
                specs.push_back(
                    detail::family_spec(f, size, size, pick(128), derive_seed(root, k++)));
            }
        }
    }
    return specs;
}

inline Dataset generate_preset(const std::string& dataset, std::uint64_t base_seed,
                               unsigned threads = 1, std::uint32_t count_override = 0) {
    Dataset ds = generate_dataset(preset_specs(dataset, base_seed, count_override),
                                  exact_centralities, threads);
    ds.name = dataset;
    return ds;
}

// --- Directory serialization ---------------------------------------------------

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string instance_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "graph_%06zu", index);
    return buf;
}

inline nlohmann::json spec_to_json(const GeneratorSpec& s) {
    nlohmann::json j;
    j["family"] = family_name(s.family);
    j["params"] = s.params;
    j["n_range"] = {s.n_lo, s.n_hi};
    j["count"] = s.count;
    j["seed"] = s.seed;
    return j;
}

inline GeneratorSpec spec_from_json(const nlohmann::json& j) {
    GeneratorSpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.params = j.at("params").get<std::map<std::string, double>>();
    s.n_lo = j.at("n_range").at(0).get<VertexId>();
    s.n_hi = j.at("n_range").at(1).get<VertexId>();
    s.count = j.at("count").get<std::uint32_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

}  // namespace detail

// Sidecar: one line per vertex with the four normalized centrality values
// (degree betweenness closeness eigenvector) at 17 significant digits.
inline std::string sidecar_to_string(const Instance& inst) {
    std::string out;
    for (VertexId v = 0; v < inst.graph.n; ++v) {
        for (std::size_t c = 0; c < 4; ++c) {
            if (c) out += ' ';
            out += detail::format_g17(inst.values[c][v]);
        }
        out += '\n';
    }
    return out;
}

inline std::array<std::vector<double>, 4> sidecar_from_stream(std::istream& in, VertexId n) {
    std::array<std::vector<double>, 4> values;
    for (auto& v : values) v.resize(n);
    std::string tok;
    for (VertexId row = 0; row < n; ++row) {
        for (std::size_t c = 0; c < 4; ++c) {
            // strtod, not operator>>: "nan" (absent centrality) must round-trip.
            const char* end_expected = nullptr;
            char* end = nullptr;
            if (in >> tok) {
                end_expected = tok.c_str() + tok.size();
                values[c][row] = std::strtod(tok.c_str(), &end);
            }
            if (end != end_expected || end == nullptr) {
                throw ParseError("sidecar: expected " + std::to_string(n) +
                                 " rows of 4 values, failed at row " + std::to_string(row));
            }
        }
    }
    return values;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir.string());

    nlohmann::json manifest;
    manifest["name"] = ds.name;
    manifest["specs"] = nlohmann::json::array();
    for (const auto& s : ds.provenance_specs) manifest["specs"].push_back(detail::spec_to_json(s));
    manifest["source_files"] = ds.provenance_files;
    manifest["instances"] = nlohmann::json::array();

    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        const std::string stem = detail::instance_stem(i);
        const Instance& inst = ds.instances[i];
        {
            std::ofstream g(dir / (stem + ".graph"), std::ios::binary);
            if (!g) throw IoError("cannot write " + (dir / (stem + ".graph")).string());
            g << graph_to_string(inst.graph);
        }
        {
            std::ofstream s(dir / (stem + ".centrality"), std::ios::binary);
            if (!s) throw IoError("cannot write " + (dir / (stem + ".centrality")).string());
            s << sidecar_to_string(inst);
        }
        nlohmann::json entry;
        entry["graph"] = stem + ".graph";
        entry["centrality"] = stem + ".centrality";
        entry["n"] = inst.graph.n;
        manifest["instances"].push_back(entry);
    }
    std::ofstream m(dir / "manifest.json", std::ios::binary);
    if (!m) throw IoError("cannot write " + (dir / "manifest.json").string());
    m << manifest.dump(2) << '\n';
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream m(dir / "manifest.json", std::ios::binary);
    if (!m) throw IoError("cannot open " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        m >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest.json: " + std::string(e.what()));
    }
    Dataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        for (const auto& j : manifest.at("specs"))
            ds.provenance_specs.push_back(detail::spec_from_json(j));
        ds.provenance_files =
            manifest.at("source_files").get<std::vector<std::string>>();
        for (const auto& entry : manifest.at("instances")) {
            Instance inst;
            const fs::path gpath = dir / entry.at("graph").get<std::string>();
            std::ifstream g(gpath, std::ios::binary);
            if (!g) throw IoError("cannot open " + gpath.string());
            inst.graph = load_graph(g);
            const fs::path cpath = dir / entry.at("centrality").get<std::string>();
            std::ifstream c(cpath, std::ios::binary);
            if (!c) throw IoError("cannot open " + cpath.string());
            inst.values = sidecar_from_stream(c, inst.graph.n);
            if (entry.at("n").get<VertexId>() != inst.graph.n) {
                throw ParseError("manifest n mismatch for " + gpath.string());
            }
            ds.instances.push_back(std::move(inst));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest.json: " + std::string(e.what()));
    }
    return ds;
}

// Real-world ingestion: parse, clean, attach exact centralities. The measured
// values stay comparable across formats because parsing canonicalizes first.
inline Dataset ingest_real(const std::vector<std::filesystem::path>& files,
                           const OracleHook& oracle = exact_centralities,
                           std::optional<EdgeListFormat> forced_format = std::nullopt) {
    Dataset ds;
    ds.name = "real";
    for (const auto& path : files) {
        EdgeListFormat fmt;
        const std::string ext = path.extension().string();
        if (forced_format) {
            fmt = *forced_format;
        } else if (ext == ".mtx") {
            fmt = EdgeListFormat::MatrixMarket;
        } else if (ext == ".txt" || ext == ".edges" || ext == ".el") {
            fmt = EdgeListFormat::SnapEdgeList;
        } else {
            throw ConfigError("unsupported edge-list extension '" + ext + "' for " +
                              path.string());
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path.string());
        Instance inst;
        try {
            inst.graph = parse_edge_list(in, fmt);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        inst.values = oracle(inst.graph);
        ds.instances.push_back(std::move(inst));
        ds.provenance_files.push_back(path.filename().string());
    }
    return ds;
}

}  // namespace centrank
