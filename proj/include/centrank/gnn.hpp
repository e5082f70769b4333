#pragma once
// Message-passing embedding core: a learned initial embedding broadcast to
// every vertex, source/target message MLPs, and a layer-norm LSTM update
// iterated t_max times over the adjacency structure.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "centrank/error.hpp"
#include "centrank/graph.hpp"
#include "centrank/optim.hpp"
#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"

namespace centrank {

struct DenseLayer {
    Tensor w;  // [in, out]
    Tensor b;  // [out]
};

using Mlp = std::vector<DenseLayer>;

struct LayerNormParams {
    Tensor gain;  // [d]
    Tensor bias;  // [d]
};

// Gate blocks in the packed kernel/bias are ordered: input, candidate,
// forget, output. The kernel consumes [aggregate(2d), V(d)] rows.
struct LstmParams {
    Tensor kernel;  // [3d, 4d]
    Tensor bias;    // [4d]
    LayerNormParams ln_input, ln_candidate, ln_forget, ln_output, ln_cell;
};

struct EmbeddingState {
    Tensor v;    // [n, d] recurrent output, read by downstream heads
    Tensor v_h;  // [n, d] cell memory
};

struct GnnParams {
    std::size_t d = 0;
    std::size_t t_max = 0;
    Tensor v_init;  // [1, d]
    Mlp src_msg;    // (d, d, d)
    Mlp tgt_msg;    // (d, d, d)
    LstmParams cell;
};

namespace detail {

// widths = {in, h1, ..., out}; layer k is named "<prefix>/k/{w,b}".
inline Mlp init_mlp(ParamStore& store, const std::string& prefix,
                    const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Mlp mlp;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        DenseLayer layer;
        layer.w = xavier_uniform(widths[k], widths[k + 1], derive_seed(seed, k));
        layer.b = Tensor::zeros({widths[k + 1]}, true);
        const std::string base = prefix + "/" + std::to_string(k);
        store.add(base + "/w", layer.w);
        store.add(base + "/b", layer.b);
        mlp.push_back(std::move(layer));
    }
    return mlp;
}

inline LayerNormParams init_layer_norm(ParamStore& store, const std::string& prefix,
                                       std::size_t d) {
    LayerNormParams ln;
    ln.gain = Tensor::from({d}, std::vector<double>(d, 1.0), true);
    ln.bias = Tensor::zeros({d}, true);
    store.add(prefix + "/gain", ln.gain);
    store.add(prefix + "/bias", ln.bias);
    return ln;
}

}  // namespace detail

// Registers every tensor in `store` under "gnn/..." and returns handles that
// share storage with the store, so optimizer updates are visible here.
inline GnnParams init_gnn_params(ParamStore& store, std::size_t d, std::size_t t_max,
                                 std::uint64_t seed) {
    if (d < 2) throw UsageError("init_gnn_params: embedding width must be at least 2");
    if (t_max == 0) throw UsageError("init_gnn_params: t_max must be positive");

    GnnParams p;
    p.d = d;
    p.t_max = t_max;

    p.v_init = xavier_uniform(1, d, derive_seed(seed, 0));
    store.add("gnn/v_init", p.v_init);

    const std::vector<std::size_t> msg_widths = {d, d, d, d};
    p.src_msg = detail::init_mlp(store, "gnn/src_msg", msg_widths, derive_seed(seed, 1));
    p.tgt_msg = detail::init_mlp(store, "gnn/tgt_msg", msg_widths, derive_seed(seed, 2));

    p.cell.kernel = xavier_uniform(3 * d, 4 * d, derive_seed(seed, 3));
    store.add("gnn/cell/kernel", p.cell.kernel);

    std::vector<double> bias(4 * d);
    Rng bias_rng(derive_seed(seed, 4));
    xavier_fill(bias, 4 * d, 4 * d, bias_rng);
    for (std::size_t j = 2 * d; j < 3 * d; ++j) bias[j] += 1.0;  // forget block
    p.cell.bias = Tensor::from({4 * d}, std::move(bias), true);
    store.add("gnn/cell/bias", p.cell.bias);

    p.cell.ln_input = detail::init_layer_norm(store, "gnn/cell/ln_input", d);
    p.cell.ln_candidate = detail::init_layer_norm(store, "gnn/cell/ln_candidate", d);
    p.cell.ln_forget = detail::init_layer_norm(store, "gnn/cell/ln_forget", d);
    p.cell.ln_output = detail::init_layer_norm(store, "gnn/cell/ln_output", d);
    p.cell.ln_cell = detail::init_layer_norm(store, "gnn/cell/ln_cell", d);
    return p;
}

// Affine + ReLU for every hidden layer; the last layer stays linear.
inline Tensor mlp_forward(const Mlp& layers, const Tensor& x) {
    if (layers.empty()) throw UsageError("mlp_forward: empty layer list");
    Tensor h = x;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        h = add_rowvec(matmul(h, layers[k].w), layers[k].b);
        if (k + 1 < layers.size()) h = relu(h);
    }
    return h;
}

// One recurrent update. Gate pre-activations come from [input, V]; each gate
// block is layer-normalized with its own gain/bias; i/f/o gates are sigmoid,
// the candidate uses ReLU, and the cell memory is layer-normalized before the
// (ReLU) output activation.
inline EmbeddingState lstm_step(const LstmParams& cell, const Tensor& input,
                                const EmbeddingState& state) {
    if (state.v.rank() != 2) throw ShapeError("lstm_step: state must be rank-2");
    const std::size_t d = state.v.dim(1);
    if (input.rank() != 2 || input.dim(0) != state.v.dim(0) || input.dim(1) != 2 * d)
        throw ShapeError("lstm_step: input must be [n, 2d]");

    Tensor z = add_rowvec(matmul(concat({input, state.v}, 1), cell.kernel), cell.bias);
    Tensor i = sigmoid(layer_norm(slice_cols(z, 0, d), cell.ln_input.gain, cell.ln_input.bias));
    Tensor g = relu(layer_norm(slice_cols(z, d, 2 * d), cell.ln_candidate.gain,
                               cell.ln_candidate.bias));
    Tensor f = sigmoid(layer_norm(slice_cols(z, 2 * d, 3 * d), cell.ln_forget.gain,
                                  cell.ln_forget.bias));
    Tensor o = sigmoid(layer_norm(slice_cols(z, 3 * d, 4 * d), cell.ln_output.gain,
                                  cell.ln_output.bias));

    Tensor c = layer_norm(add(mul(f, state.v_h), mul(i, g)), cell.ln_cell.gain,
                          cell.ln_cell.bias);
    return EmbeddingState{mul(o, relu(c)), c};
}

inline Tensor adjacency_tensor(const AdjacencyMatrix& m) {
    return Tensor::from({m.n, m.n}, m.entries, false);
}

namespace detail {

inline void require_finite_embedding(const Tensor& t, std::size_t step) {
    for (double v : t.data())
        if (!std::isfinite(v))
            throw NumericError("message passing produced a non-finite embedding at step " +
                               std::to_string(step));
}

}  // namespace detail

// Runs the full loop and returns every V along the way: trace[0] is the
// broadcast initial embedding, trace[t] the embeddings after step t.
inline std::vector<Tensor> message_passing_trace(const AdjacencyMatrix& adj,
                                                 const GnnParams& params) {
    if (adj.n == 0) throw InputError("message_passing: empty graph");
    const std::size_t n = adj.n;

    Tensor m = adjacency_tensor(adj);
    Tensor mt = transpose(m);

    EmbeddingState state;
    state.v = broadcast_rows(params.v_init, n);
    state.v_h = Tensor::zeros({n, params.d});

    std::vector<Tensor> trace;
    trace.reserve(params.t_max + 1);
    trace.push_back(state.v);
    for (std::size_t t = 1; t <= params.t_max; ++t) {
        Tensor a = matmul(m, mlp_forward(params.src_msg, state.v));
        Tensor b = matmul(mt, mlp_forward(params.tgt_msg, state.v));
        state = lstm_step(params.cell, concat({a, b}, 1), state);
        detail::require_finite_embedding(state.v, t);
        detail::require_finite_embedding(state.v_h, t);
        trace.push_back(state.v);
    }
    return trace;
}

inline Tensor message_passing_run(const AdjacencyMatrix& adj, const GnnParams& params) {
    return message_passing_trace(adj, params).back();
}

inline Tensor message_passing_run(const Graph& g, const GnnParams& params) {
    return message_passing_run(adjacency(g), params);
}

}  // namespace centrank
