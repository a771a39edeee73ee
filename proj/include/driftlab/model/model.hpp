#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftlab/bug_kind.hpp"
#include "driftlab/corpus/sample.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

double default_beta(BugKind kind);  // 0.5 var-misuse, 4 wrong-binop, 0.5 arg-swap

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t model_dim = 128;  // m
    std::size_t layers = 6;       // k
    std::string heads_order = "loc,cls,rep";  // permutation of cls,loc,rep or "flat"
    BugKind kind = BugKind::VarMisuse;
    std::size_t max_len = kDefaultMaxLen;  // L
    double gamma = 2.0;
    double beta = 0.5;
    double layer_norm_eps = 1e-5;
    bool log_pointer_loss = false;
};

// Layer index (0-based, into the k block outputs) each head reads from.
struct HeadWiring {
    std::size_t cls, loc, rep;
};

// Parses heads_order and checks k ≥ 3 for non-flat hierarchies. The first
// named task reads layer k−2, the second k−1, the third k; "flat" attaches
// all three to layer k. Throws ConfigError on malformed orders.
HeadWiring resolve_heads(const ModelConfig& config);

void validate_config(const ModelConfig& config);

struct Vocab {
    std::vector<std::string> id_to_text;  // [0] is <UNK>
    std::unordered_map<std::string, std::size_t> text_to_id;

    static Vocab build(const std::vector<const DatasetSplit*>& splits);
    static Vocab from_list(std::vector<std::string> id_to_text);

    std::size_t id(const std::string& text) const {
        auto it = text_to_id.find(text);
        return it == text_to_id.end() ? 0 : it->second;
    }
    std::size_t size() const { return id_to_text.size(); }
};

// Flat parameter storage with a named tensor registry, shared between the
// model, its gradients and the optimizer moments.
struct TensorView {
    std::string name;
    std::size_t offset = 0, rows = 0, cols = 0;

    std::size_t count() const { return rows * cols; }
};

struct ParamArena {
    std::vector<double> data;
    std::vector<TensorView> tensors;
    std::unordered_map<std::string, std::size_t> by_name;

    void add(const std::string& name, std::size_t rows, std::size_t cols);
    const TensorView& view(const std::string& name) const;
    double* at(const std::string& name);
    const double* at(const std::string& name) const;
    bool has(const std::string& name) const { return by_name.count(name) != 0; }
    std::size_t size() const { return data.size(); }
    void zero();
    bool all_finite() const;

    // same tensor layout, all values zero
    ParamArena like() const;
};

struct ModelParams {
    ModelConfig config;
    Vocab vocab;
    ParamArena arena;
};

// Registers every tensor the config requires, in a fixed order.
ParamArena build_arena(const ModelConfig& config);

// Uniform [−1/√m, 1/√m] weights and embeddings, zero biases, unit layer
// norm gains.
ModelParams init_params(const ModelConfig& config, Vocab vocab, Rng& rng);

struct Prediction {
    std::array<double, 2> p_cls{};  // [p_{−1}, p_{+1}]
    std::vector<double> p_loc;      // length n, zero at masked positions
    std::vector<double> p_rep;      // length n, or 17 for wrong-binop
    std::vector<double> h_cls;      // feature the cls head read (length m)
};

// Intermediates recorded by forward so the exact backward pass can replay
// the computation.
struct LayerTrace {
    std::vector<double> x_in, q, k, v, attn, attn_out, r1;
    std::vector<double> ln1_xhat, ln1_inv_std, x1;
    std::vector<double> h, g, r2;
    std::vector<double> ln2_xhat, ln2_inv_std, x2;
};

struct ForwardTrace {
    std::size_t n = 0;
    std::vector<std::size_t> ids;
    std::vector<LayerTrace> layers;
    HeadWiring wiring{};
    std::vector<double> cls_hidden_pre, cls_hidden;
    std::array<double, 2> cls_logits{};
    std::vector<double> loc_scores;
    std::vector<double> rep_hidden_pre, rep_hidden;  // wrong-binop two-layer head
    std::vector<double> rep_scores;
    Prediction pred;
};

// Softmax over the set-bit positions; exact zeros elsewhere. Throws
// MaskError when the mask is all-zero.
std::vector<double> masked_softmax(const std::vector<double>& scores,
                                   const std::vector<std::uint8_t>& mask);

// Embeds tokens (token + positional), applies the k transformation layers
// (single-head self-attention + feedforward, residuals, layer norm), and
// evaluates the three heads on the layers resolve_heads selects. The cls
// head and the wrong-binop rep head read position 0. Throws ShapeError on
// length or vocabulary mismatches.
Prediction forward(const ModelParams& params, const Sample& sample,
                   ForwardTrace* trace = nullptr);

int classify(const Prediction& pred, double threshold = 0.5);

struct Pointed {
    std::size_t loc = 0;
    std::size_t rep = 0;
};

// Argmax of P_loc and P_rep; ties break toward the lowest index.
Pointed point(const Prediction& pred);

}  // namespace driftlab
