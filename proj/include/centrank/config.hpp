#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "centrank/dataset.hpp"
#include "centrank/error.hpp"
#include "centrank/train.hpp"

namespace centrank {

// Run configuration files are flat, line-oriented `key = value` documents
// grouped under `[section]` headers. Full-line comments start with '#' or
// ';'. Unknown sections or keys are rejected, and every relative path named
// in a file resolves against the file's own directory.

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

struct IniDoc {
    std::filesystem::path source;  // empty when parsed from a bare stream
    std::vector<IniEntry> entries;

    std::vector<std::string> values(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (e.section == section && e.key == key) out.push_back(e.value);
        return out;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        auto v = values(section, key);
        if (v.empty()) return std::nullopt;
        if (v.size() > 1)
            throw ConfigError("config: key '" + section + "." + key + "' given " +
                              std::to_string(v.size()) + " times");
        return v.front();
    }

    std::string require(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v) throw ConfigError("config: missing required key '" + section + "." + key + "'");
        return *v;
    }

    bool has_section(const std::string& section) const {
        for (const auto& e : entries)
            if (e.section == section) return true;
        return false;
    }

    // Paths inside a config file are relative to the file itself.
    std::filesystem::path resolve(const std::string& value) const {
        std::filesystem::path p(value);
        if (p.is_absolute() || source.empty()) return p;
        return source.parent_path() / p;
    }
};

inline IniDoc parse_ini(std::istream& in, std::filesystem::path source = {}) {
    IniDoc doc;
    doc.source = std::move(source);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string body = detail::trim(line);
        if (body.empty() || body[0] == '#' || body[0] == ';') continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header '" + body + "'");
            section = detail::trim(body.substr(1, body.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + body + "'");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any [section]");
        IniEntry entry;
        entry.section = section;
        entry.key = detail::trim(body.substr(0, eq));
        entry.value = detail::trim(body.substr(eq + 1));
        entry.line = line_no;
        if (entry.key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (entry.value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" +
                              entry.key + "'");
        doc.entries.push_back(std::move(entry));
    }
    return doc;
}

inline IniDoc load_ini(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_ini(in, path);
}

// ---- schema -----------------------------------------------------------------

using IniSchema = std::map<std::string, std::set<std::string>>;

inline const IniSchema& run_config_schema() {
    static const IniSchema schema = {
        {"run", {"seed", "threads", "out_dir"}},
        {"generate", {"preset", "count", "name", "spec"}},
        {"train",
         {"dataset", "probe", "d", "t_max", "epochs", "batches_per_epoch", "batch_size",
          "mode", "centralities", "multitask", "learning_rate", "seed", "checkpoint",
          "epoch_log", "resume"}},
    };
    return schema;
}

inline void enforce_schema(const IniDoc& doc, const IniSchema& schema,
                           const std::set<std::pair<std::string, std::string>>& repeatable = {
                               {"generate", "spec"}}) {
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (const auto& e : doc.entries) {
        auto sec = schema.find(e.section);
        if (sec == schema.end())
            throw ConfigError("config line " + std::to_string(e.line) + ": unknown section [" +
                              e.section + "]");
        if (!sec->second.count(e.key))
            throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" +
                              e.section + "." + e.key + "'");
        if (++seen[{e.section, e.key}] > 1 && !repeatable.count({e.section, e.key}))
            throw ConfigError("config line " + std::to_string(e.line) + ": key '" + e.section +
                              "." + e.key + "' given more than once");
    }
}

// ---- value conversion ---------------------------------------------------------

inline std::uint64_t config_u64(const std::string& value, const std::string& context) {
    if (value.empty()) throw ConfigError(context + ": empty integer");
    std::uint64_t out = 0;
    for (char c : value) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ConfigError(context + ": '" + value + "' is not a non-negative integer");
        out = out * 10 + std::uint64_t(c - '0');
    }
    return out;
}

inline double config_double(const std::string& value, const std::string& context) {
    char* end = nullptr;
    const double out = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
        throw ConfigError(context + ": '" + value + "' is not a number");
    return out;
}

inline bool config_bool(const std::string& value, const std::string& context) {
    std::string v;
    for (char c : value) v += char(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(context + ": '" + value + "' is not a boolean");
}

// ---- typed sections -----------------------------------------------------------

struct RunSection {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
};

inline RunSection run_section(const IniDoc& doc) {
    RunSection out;
    if (auto v = doc.get("run", "seed")) out.seed = config_u64(*v, "run.seed");
    if (auto v = doc.get("run", "threads")) {
        const std::uint64_t t = config_u64(*v, "run.threads");
        if (t < 1) throw ConfigError("run.threads: must be >= 1");
        out.threads = unsigned(t);
    }
    if (auto v = doc.get("run", "out_dir")) out.out_dir = *v;
    return out;
}

struct GenerateSection {
    std::optional<std::string> preset;
    std::uint32_t count_override = 0;
    std::optional<std::string> name;
    std::vector<std::string> spec_lines;
};

inline GenerateSection generate_section(const IniDoc& doc) {
    GenerateSection out;
    if (auto v = doc.get("generate", "preset")) out.preset = *v;
    if (auto v = doc.get("generate", "count"))
        out.count_override = std::uint32_t(config_u64(*v, "generate.count"));
    if (auto v = doc.get("generate", "name")) out.name = *v;
    out.spec_lines = doc.values("generate", "spec");
    if (out.preset && !out.spec_lines.empty())
        throw ConfigError("generate: give either 'preset' or 'spec' lines, not both");
    if (!out.preset && out.spec_lines.empty())
        throw ConfigError("generate: needs a 'preset' or at least one 'spec' line");
    if (!out.preset && out.count_override)
        throw ConfigError("generate.count: applies to presets only; spec lines carry counts");
    return out;
}

// One generator per line: "<family> [param=value ...] n=LO..HI count=C [seed=S]".
inline GeneratorSpec parse_spec_line(const std::string& text, std::uint64_t fallback_seed) {
    std::istringstream in(text);
    std::string family;
    if (!(in >> family)) throw ConfigError("generate.spec: empty spec line");
    GeneratorSpec spec;
    spec.family = family_from_name(family);
    spec.seed = fallback_seed;
    bool n_seen = false, count_seen = false;
    std::string tok;
    while (in >> tok) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
            throw ConfigError("generate.spec: expected key=value, got '" + tok + "' in '" +
                              text + "'");
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        if (key == "n") {
            const std::size_t dots = value.find("..");
            if (dots == std::string::npos) {
                spec.n_lo = spec.n_hi = VertexId(config_u64(value, "generate.spec n"));
            } else {
                spec.n_lo = VertexId(config_u64(value.substr(0, dots), "generate.spec n"));
                spec.n_hi = VertexId(config_u64(value.substr(dots + 2), "generate.spec n"));
            }
            n_seen = true;
        } else if (key == "count") {
            spec.count = std::uint32_t(config_u64(value, "generate.spec count"));
            count_seen = true;
        } else if (key == "seed") {
            spec.seed = config_u64(value, "generate.spec seed");
        } else {
            spec.params[key] = config_double(value, "generate.spec " + key);
        }
    }
    if (!n_seen) throw ConfigError("generate.spec: missing n=LO..HI in '" + text + "'");
    if (!count_seen) throw ConfigError("generate.spec: missing count= in '" + text + "'");
    return spec;
}

// Presets derive per-family seeds from the base seed; explicit spec lines
// default to stream-indexed children of it unless they pin their own.
inline std::vector<GeneratorSpec> materialize_specs(const GenerateSection& section,
                                                    std::uint64_t base_seed) {
    if (section.preset)
        return preset_specs(*section.preset, base_seed, section.count_override);
    std::vector<GeneratorSpec> specs;
    for (std::size_t i = 0; i < section.spec_lines.size(); ++i)
        specs.push_back(parse_spec_line(section.spec_lines[i], derive_seed(base_seed, i)));
    return specs;
}

struct TrainSection {
    TrainConfig config;  // seed merged by the caller (flag > train.seed > run.seed)
    std::optional<std::uint64_t> seed;
    std::string dataset;
    std::optional<std::string> probe;
    std::string checkpoint = "model.ck";
    std::string epoch_log = "epoch_log.csv";
    bool resume = false;
};

inline TrainSection train_section(const IniDoc& doc) {
    TrainSection out;
    out.dataset = doc.require("train", "dataset");
    if (auto v = doc.get("train", "probe")) out.probe = *v;
    if (auto v = doc.get("train", "d"))
        out.config.d = std::size_t(config_u64(*v, "train.d"));
    if (auto v = doc.get("train", "t_max"))
        out.config.t_max = std::size_t(config_u64(*v, "train.t_max"));
    if (auto v = doc.get("train", "epochs"))
        out.config.epochs = std::size_t(config_u64(*v, "train.epochs"));
    if (auto v = doc.get("train", "batches_per_epoch"))
        out.config.batches_per_epoch = std::size_t(config_u64(*v, "train.batches_per_epoch"));
    if (auto v = doc.get("train", "batch_size"))
        out.config.batch_size = std::size_t(config_u64(*v, "train.batch_size"));
    if (auto v = doc.get("train", "mode")) out.config.mode = head_mode_from_name(*v);
    if (auto v = doc.get("train", "centralities")) {
        out.config.centralities.clear();
        std::string item;
        std::istringstream list(*v);
        while (std::getline(list, item, ',')) {
            item = detail::trim(item);
            if (item.empty())
                throw ConfigError("train.centralities: empty entry in '" + *v + "'");
            out.config.centralities.push_back(measure_from_name(item));
        }
        if (out.config.centralities.empty())
            throw ConfigError("train.centralities: empty list");
    }
    if (auto v = doc.get("train", "multitask")) {
        out.config.multitask = config_bool(*v, "train.multitask");
    } else {
        out.config.multitask = out.config.centralities.size() == std::size(kAllMeasures);
    }
    if (auto v = doc.get("train", "learning_rate")) {
        out.config.adam.lr = config_double(*v, "train.learning_rate");
        if (!(out.config.adam.lr > 0.0))
            throw ConfigError("train.learning_rate: must be positive");
    }
    if (auto v = doc.get("train", "seed")) out.seed = config_u64(*v, "train.seed");
    if (auto v = doc.get("train", "checkpoint")) out.checkpoint = *v;
    if (auto v = doc.get("train", "epoch_log")) out.epoch_log = *v;
    if (auto v = doc.get("train", "resume")) out.resume = config_bool(*v, "train.resume");
    return out;
}

}  // namespace centrank
