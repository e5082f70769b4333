#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "centrank/error.hpp"
#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"

namespace centrank {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as little-endian doubles");

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    if (fan_in == 0 || fan_out == 0) throw UsageError("xavier: fans must be positive");
    return std::sqrt(6.0 / double(fan_in + fan_out));
}

inline void xavier_fill(std::vector<double>& out, std::size_t fan_in, std::size_t fan_out,
                        Rng& rng) {
    const double bound = xavier_bound(fan_in, fan_out);
    for (double& v : out) v = rng.uniform(-bound, bound);
}

// Uniform on ±sqrt(6 / (fan_in + fan_out)), the Glorot/Xavier scheme.
inline Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    std::vector<double> data(fan_in * fan_out);
    Rng rng(seed);
    xavier_fill(data, fan_in, fan_out, rng);
    return Tensor::from({fan_in, fan_out}, std::move(data), true);
}

// Named trainable parameters plus their Adam moments. Iteration is in name
// order (std::map), which pins the update order and keeps runs reproducible.
class ParamStore {
  public:
    struct Slot {
        Tensor param;
        std::vector<double> m, v;
    };

    Tensor& add(const std::string& name, Tensor t) {
        if (!t.requires_grad()) throw UsageError("ParamStore::add: '" + name +
                                                 "' must track gradients");
        auto [it, inserted] = slots_.emplace(name, Slot{std::move(t), {}, {}});
        if (!inserted) throw UsageError("ParamStore::add: duplicate parameter '" + name + "'");
        it->second.m.assign(it->second.param.size(), 0.0);
        it->second.v.assign(it->second.param.size(), 0.0);
        return it->second.param;
    }

    bool contains(const std::string& name) const { return slots_.count(name) > 0; }

    Tensor& at(const std::string& name) {
        auto it = slots_.find(name);
        if (it == slots_.end()) throw UsageError("ParamStore: unknown parameter '" + name + "'");
        return it->second.param;
    }

    const Tensor& at(const std::string& name) const {
        auto it = slots_.find(name);
        if (it == slots_.end()) throw UsageError("ParamStore: unknown parameter '" + name + "'");
        return it->second.param;
    }

    std::size_t size() const { return slots_.size(); }
    std::int64_t step() const { return step_; }
    void set_step(std::int64_t s) { step_ = s; }

    auto begin() { return slots_.begin(); }
    auto end() { return slots_.end(); }
    auto begin() const { return slots_.begin(); }
    auto end() const { return slots_.end(); }

    void zero_grads() {
        for (auto& [name, slot] : slots_) slot.param.clear_grad();
    }

    std::int64_t bump_step() { return ++step_; }

  private:
    std::map<std::string, Slot> slots_;
    std::int64_t step_ = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter; consumes (and clears)
// the accumulated gradients.
inline void adam_step(ParamStore& store, const AdamConfig& cfg = {}) {
    const std::int64_t t = store.bump_step();
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (auto& [name, slot] : store) {
        if (!slot.param.has_grad()) {
            throw UsageError("adam_step: parameter '" + name + "' has no gradient");
        }
        auto& p = slot.param.data();
        auto& g = slot.param.grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
            slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g[i];
            slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        slot.param.clear_grad();
    }
}

// --- Checkpoint container -------------------------------------------------------
//
// Layout (little-endian):
//   magic "CRCK" | u32 version | u64 meta_len | meta (UTF-8 JSON) | i64 step
//   | u64 record_count | records
// record: u32 name_len | name | u32 rank | u64 dims[rank] | f64 payload[]
// Records cover "p:<name>", "m:<name>", "v:<name>" for every parameter, so a
// resumed run continues the optimizer exactly.

namespace detail {

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ParseError("checkpoint: truncated file");
    return v;
}

inline void write_record(std::ostream& out, const std::string& name,
                         const std::vector<std::size_t>& shape,
                         const std::vector<double>& payload) {
    write_pod<std::uint32_t>(out, std::uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_pod<std::uint32_t>(out, std::uint32_t(shape.size()));
    for (std::size_t d : shape) write_pod<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size() * sizeof(double)));
}

struct Record {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> payload;
};

inline Record read_record(std::istream& in) {
    Record r;
    const auto name_len = read_pod<std::uint32_t>(in);
    r.name.resize(name_len);
    in.read(r.name.data(), name_len);
    const auto rank = read_pod<std::uint32_t>(in);
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        r.shape.push_back(std::size_t(read_pod<std::uint64_t>(in)));
        total *= r.shape.back();
    }
    r.payload.resize(total);
    in.read(reinterpret_cast<char*>(r.payload.data()),
            std::streamsize(total * sizeof(double)));
    if (!in) throw ParseError("checkpoint: truncated record '" + r.name + "'");
    return r;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                            const nlohmann::json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write("CRCK", 4);
    detail::write_pod<std::uint32_t>(out, 1);
    const std::string meta_text = meta.dump();
    detail::write_pod<std::uint64_t>(out, meta_text.size());
    out.write(meta_text.data(), std::streamsize(meta_text.size()));
    detail::write_pod<std::int64_t>(out, store.step());
    detail::write_pod<std::uint64_t>(out, store.size() * 3);
    for (const auto& [name, slot] : store) {
        detail::write_record(out, "p:" + name, slot.param.shape(), slot.param.data());
        detail::write_record(out, "m:" + name, slot.param.shape(), slot.m);
        detail::write_record(out, "v:" + name, slot.param.shape(), slot.v);
    }
    if (!out) throw IoError("short write on checkpoint " + path.string());
}

struct Checkpoint {
    nlohmann::json meta;
    std::int64_t step = 0;
    std::map<std::string, detail::Record> records;

    const detail::Record& record(const std::string& key) const {
        auto it = records.find(key);
        if (it == records.end()) {
            throw ParseError("checkpoint: missing record '" + key + "'");
        }
        return it->second;
    }
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "CRCK") {
        throw ParseError("checkpoint: bad magic in " + path.string());
    }
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != 1) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ck;
    const auto meta_len = detail::read_pod<std::uint64_t>(in);
    std::string meta_text(meta_len, '\0');
    in.read(meta_text.data(), std::streamsize(meta_len));
    if (!in) throw ParseError("checkpoint: truncated metadata");
    try {
        ck.meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint: bad metadata JSON: " + std::string(e.what()));
    }
    ck.step = detail::read_pod<std::int64_t>(in);
    const auto count = detail::read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        detail::Record r = detail::read_record(in);
        ck.records.emplace(r.name, std::move(r));
    }
    return ck;
}

// Restores parameter values and optimizer moments into an already-built store
// (shapes must match — the architecture is reconstructed from meta first).
inline void restore_params(ParamStore& store, const Checkpoint& ck) {
    store.set_step(ck.step);
    for (auto& [name, slot] : store) {
        const auto& p = ck.record("p:" + name);
        if (p.shape != slot.param.shape()) {
            throw ParseError("checkpoint: shape mismatch for '" + name + "'");
        }
        slot.param.data() = p.payload;
        slot.m = ck.record("m:" + name).payload;
        slot.v = ck.record("v:" + name).payload;
        if (slot.m.size() != slot.param.size() || slot.v.size() != slot.param.size()) {
            throw ParseError("checkpoint: moment size mismatch for '" + name + "'");
        }
    }
}

}  // namespace centrank
