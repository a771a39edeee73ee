#include "driftlab/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "driftlab/errors.hpp"
#include "driftlab/kernels.hpp"

namespace driftlab {

namespace {

constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC1 * (x + kGeluC2 * x * x * x)));
}

// y [n x out] = x [n x m] * w^T + b, with w stored [out x m]
void linear(const double* x, const double* w, const double* b, double* y,
            std::size_t n, std::size_t m, std::size_t out) {
    kernels::gemm_nt(x, w, y, n, m, out, false);
    for (std::size_t i = 0; i < n; ++i) {
        kernels::add(b, y + i * out, out);
    }
}

void layer_norm_rows(const double* x, const double* g, const double* b, double eps,
                     double* xhat, double* inv_std, double* y,
                     std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x + i * m;
        double mean = kernels::sum(row, m) / static_cast<double>(m);
        double var = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(m);
        double inv = 1.0 / std::sqrt(var + eps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < m; ++j) {
            double xh = (row[j] - mean) * inv;
            xhat[i * m + j] = xh;
            y[i * m + j] = g[j] * xh + b[j];
        }
    }
}

std::string layer_prefix(std::size_t i) {
    return "layer" + std::to_string(i) + ".";
}

}  // namespace

double default_beta(BugKind kind) {
    switch (kind) {
        case BugKind::VarMisuse: return 0.5;
        case BugKind::WrongBinop: return 4.0;
        case BugKind::ArgSwap: return 0.5;
    }
    throw ConfigError("unknown bug kind");
}

HeadWiring resolve_heads(const ModelConfig& config) {
    if (config.layers == 0) throw ConfigError("layers must be positive");
    std::size_t top = config.layers - 1;
    if (config.heads_order == "flat") {
        return HeadWiring{top, top, top};
    }
    if (config.layers < 3) {
        throw ConfigError("heads_order '" + config.heads_order +
                          "' needs at least 3 layers, got " + std::to_string(config.layers));
    }
    std::vector<std::string> names;
    std::stringstream ss(config.heads_order);
    std::string part;
    while (std::getline(ss, part, ',')) names.push_back(part);
    std::set<std::string> seen(names.begin(), names.end());
    if (names.size() != 3 || seen != std::set<std::string>{"cls", "loc", "rep"}) {
        throw ConfigError("heads_order must be 'flat' or a permutation of cls,loc,rep: '" +
                          config.heads_order + "'");
    }
    HeadWiring w{};
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t layer = top - 2 + i;
        if (names[i] == "cls") w.cls = layer;
        else if (names[i] == "loc") w.loc = layer;
        else w.rep = layer;
    }
    return w;
}

void validate_config(const ModelConfig& config) {
    if (config.vocab_size == 0) throw ConfigError("vocab_size must be positive");
    if (config.model_dim == 0) throw ConfigError("model_dim must be positive");
    if (config.max_len < 2) throw ConfigError("max_len must be at least 2");
    if (config.gamma < 0.0) throw ConfigError("gamma must be non-negative");
    if (config.layer_norm_eps < 0.0) throw ConfigError("layer_norm_eps must be non-negative");
    resolve_heads(config);
}

Vocab Vocab::build(const std::vector<const DatasetSplit*>& splits) {
    std::set<std::string> texts;
    for (const DatasetSplit* split : splits) {
        for (const Sample& sample : split->samples) {
            for (const std::string& text : sample.tokens) texts.insert(text);
        }
    }
    texts.erase("<UNK>");
    std::vector<std::string> id_to_text;
    id_to_text.reserve(texts.size() + 1);
    id_to_text.push_back("<UNK>");
    id_to_text.insert(id_to_text.end(), texts.begin(), texts.end());
    return from_list(std::move(id_to_text));
}

Vocab Vocab::from_list(std::vector<std::string> id_to_text) {
    if (id_to_text.empty() || id_to_text[0] != "<UNK>") {
        throw ConfigError("vocabulary must start with <UNK>");
    }
    Vocab vocab;
    vocab.id_to_text = std::move(id_to_text);
    for (std::size_t i = 0; i < vocab.id_to_text.size(); ++i) {
        if (!vocab.text_to_id.emplace(vocab.id_to_text[i], i).second) {
            throw ConfigError("duplicate vocabulary entry: " + vocab.id_to_text[i]);
        }
    }
    return vocab;
}

void ParamArena::add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (by_name.count(name)) throw ConfigError("duplicate tensor name: " + name);
    TensorView view{name, data.size(), rows, cols};
    by_name.emplace(name, tensors.size());
    tensors.push_back(view);
    data.resize(data.size() + rows * cols, 0.0);
}

const TensorView& ParamArena::view(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("unknown tensor name: " + name);
    return tensors[it->second];
}

double* ParamArena::at(const std::string& name) { return data.data() + view(name).offset; }

const double* ParamArena::at(const std::string& name) const {
    return data.data() + view(name).offset;
}

void ParamArena::zero() { std::fill(data.begin(), data.end(), 0.0); }

bool ParamArena::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

ParamArena ParamArena::like() const {
    ParamArena other;
    other.tensors = tensors;
    other.by_name = by_name;
    other.data.assign(data.size(), 0.0);
    return other;
}

ParamArena build_arena(const ModelConfig& config) {
    validate_config(config);
    std::size_t m = config.model_dim;
    ParamArena arena;
    arena.add("tok_emb", config.vocab_size, m);
    arena.add("pos_emb", config.max_len, m);
    for (std::size_t i = 0; i < config.layers; ++i) {
        std::string p = layer_prefix(i);
        arena.add(p + "wq", m, m);
        arena.add(p + "bq", 1, m);
        arena.add(p + "wk", m, m);
        arena.add(p + "bk", 1, m);
        arena.add(p + "wv", m, m);
        arena.add(p + "bv", 1, m);
        arena.add(p + "wo", m, m);
        arena.add(p + "bo", 1, m);
        arena.add(p + "ln1.g", 1, m);
        arena.add(p + "ln1.b", 1, m);
        arena.add(p + "w1", 4 * m, m);
        arena.add(p + "b1", 1, 4 * m);
        arena.add(p + "w2", m, 4 * m);
        arena.add(p + "b2", 1, m);
        arena.add(p + "ln2.g", 1, m);
        arena.add(p + "ln2.b", 1, m);
    }
    arena.add("cls.w1", m, m);
    arena.add("cls.b1", 1, m);
    arena.add("cls.w2", 2, m);
    arena.add("cls.b2", 1, 2);
    arena.add("loc.w", 1, m);
    arena.add("loc.b", 1, 1);
    if (config.kind == BugKind::WrongBinop) {
        arena.add("rep.w1", m, m);
        arena.add("rep.b1", 1, m);
        arena.add("rep.w2", kOperatorVocabSize, m);
        arena.add("rep.b2", 1, kOperatorVocabSize);
    } else {
        arena.add("rep.w", 1, m);
        arena.add("rep.b", 1, 1);
    }
    return arena;
}

ModelParams init_params(const ModelConfig& config, Vocab vocab, Rng& rng) {
    if (vocab.size() != config.vocab_size) {
        throw ConfigError("vocab size " + std::to_string(vocab.size()) +
                          " does not match config vocab_size " +
                          std::to_string(config.vocab_size));
    }
    ModelParams params;
    params.config = config;
    params.vocab = std::move(vocab);
    params.arena = build_arena(config);
    double bound = 1.0 / std::sqrt(static_cast<double>(config.model_dim));
    for (const TensorView& view : params.arena.tensors) {
        std::string last = view.name.substr(view.name.find_last_of('.') + 1);
        double* t = params.arena.data.data() + view.offset;
        if (last == "g") {
            std::fill(t, t + view.count(), 1.0);
        } else if (!last.empty() && last[0] == 'b') {
            std::fill(t, t + view.count(), 0.0);
        } else {
            for (std::size_t i = 0; i < view.count(); ++i) t[i] = rng.next_range(-bound, bound);
        }
    }
    return params;
}

std::vector<double> masked_softmax(const std::vector<double>& scores,
                                   const std::vector<std::uint8_t>& mask) {
    if (scores.size() != mask.size()) {
        throw ShapeError("masked_softmax: scores length " + std::to_string(scores.size()) +
                         " vs mask length " + std::to_string(mask.size()));
    }
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (mask[i] && scores[i] > max_score) max_score = scores[i];
    }
    if (max_score == -std::numeric_limits<double>::infinity()) {
        throw MaskError("masked_softmax: mask selects no positions");
    }
    std::vector<double> out(scores.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (mask[i]) {
            out[i] = std::exp(scores[i] - max_score);
            total += out[i];
        }
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (mask[i]) out[i] /= total;
    }
    return out;
}

Prediction forward(const ModelParams& params, const Sample& sample, ForwardTrace* trace) {
    const ModelConfig& config = params.config;
    std::size_t n = sample.tokens.size();
    std::size_t m = config.model_dim;
    if (n == 0) throw ShapeError("forward: empty token sequence");
    if (n > config.max_len) {
        throw ShapeError("forward: sequence length " + std::to_string(n) +
                         " exceeds max_len " + std::to_string(config.max_len));
    }
    if (sample.loc_mask.size() != n || sample.loc_target.size() != n) {
        throw ShapeError("forward: loc mask length does not match token count");
    }
    std::size_t rep_len = sample.kind == BugKind::WrongBinop ? kOperatorVocabSize : n;
    if (sample.rep_mask.size() != rep_len) {
        throw ShapeError("forward: rep mask length " + std::to_string(sample.rep_mask.size()) +
                         ", expected " + std::to_string(rep_len));
    }
    if (sample.kind != config.kind) throw ShapeError("forward: sample kind does not match model");
    if (params.arena.view("tok_emb").rows != config.vocab_size) {
        throw ShapeError("forward: parameter arena does not match config");
    }

    HeadWiring wiring = resolve_heads(config);

    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t = ForwardTrace{};
    t.n = n;
    t.wiring = wiring;
    t.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.ids[i] = params.vocab.id(sample.tokens[i]);

    const double* tok_emb = params.arena.at("tok_emb");
    const double* pos_emb = params.arena.at("pos_emb");
    std::vector<double> x(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* te = tok_emb + t.ids[i] * m;
        const double* pe = pos_emb + i * m;
        for (std::size_t j = 0; j < m; ++j) x[i * m + j] = te[j] + pe[j];
    }

    double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    t.layers.resize(config.layers);
    for (std::size_t li = 0; li < config.layers; ++li) {
        LayerTrace& lt = t.layers[li];
        std::string p = layer_prefix(li);
        lt.x_in = x;

        lt.q.resize(n * m);
        lt.k.resize(n * m);
        lt.v.resize(n * m);
        linear(x.data(), params.arena.at(p + "wq"), params.arena.at(p + "bq"), lt.q.data(), n, m, m);
        linear(x.data(), params.arena.at(p + "wk"), params.arena.at(p + "bk"), lt.k.data(), n, m, m);
        linear(x.data(), params.arena.at(p + "wv"), params.arena.at(p + "bv"), lt.v.data(), n, m, m);

        std::vector<double> scores(n * n);
        kernels::gemm_nt(lt.q.data(), lt.k.data(), scores.data(), n, m, n, false);
        kernels::scale(inv_sqrt_m, scores.data(), n * n);
        lt.attn.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = scores.data() + i * n;
            double mx = kernels::max_value(row, n);
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double e = std::exp(row[j] - mx);
                lt.attn[i * n + j] = e;
                total += e;
            }
            kernels::scale(1.0 / total, lt.attn.data() + i * n, n);
        }

        lt.attn_out.assign(n * m, 0.0);
        kernels::gemm_nn(lt.attn.data(), lt.v.data(), lt.attn_out.data(), n, n, m, false);

        std::vector<double> proj(n * m);
        linear(lt.attn_out.data(), params.arena.at(p + "wo"), params.arena.at(p + "bo"),
               proj.data(), n, m, m);

        lt.r1 = x;
        kernels::add(proj.data(), lt.r1.data(), n * m);
        lt.ln1_xhat.resize(n * m);
        lt.ln1_inv_std.resize(n);
        lt.x1.resize(n * m);
        layer_norm_rows(lt.r1.data(), params.arena.at(p + "ln1.g"), params.arena.at(p + "ln1.b"),
                        config.layer_norm_eps, lt.ln1_xhat.data(), lt.ln1_inv_std.data(),
                        lt.x1.data(), n, m);

        lt.h.resize(n * 4 * m);
        linear(lt.x1.data(), params.arena.at(p + "w1"), params.arena.at(p + "b1"),
               lt.h.data(), n, m, 4 * m);
        lt.g.resize(n * 4 * m);
        for (std::size_t i = 0; i < n * 4 * m; ++i) lt.g[i] = gelu(lt.h[i]);
        std::vector<double> ffn(n * m);
        linear(lt.g.data(), params.arena.at(p + "w2"), params.arena.at(p + "b2"),
               ffn.data(), n, 4 * m, m);

        lt.r2 = lt.x1;
        kernels::add(ffn.data(), lt.r2.data(), n * m);
        lt.ln2_xhat.resize(n * m);
        lt.ln2_inv_std.resize(n);
        lt.x2.resize(n * m);
        layer_norm_rows(lt.r2.data(), params.arena.at(p + "ln2.g"), params.arena.at(p + "ln2.b"),
                        config.layer_norm_eps, lt.ln2_xhat.data(), lt.ln2_inv_std.data(),
                        lt.x2.data(), n, m);
        x = lt.x2;
    }

    Prediction pred;

    // cls head: two affine layers with GELU between, on position 0
    {
        const double* feat = t.layers[wiring.cls].x2.data();  // row 0
        pred.h_cls.assign(feat, feat + m);
        t.cls_hidden_pre.resize(m);
        linear(feat, params.arena.at("cls.w1"), params.arena.at("cls.b1"),
               t.cls_hidden_pre.data(), 1, m, m);
        t.cls_hidden.resize(m);
        for (std::size_t j = 0; j < m; ++j) t.cls_hidden[j] = gelu(t.cls_hidden_pre[j]);
        double logits[2];
        linear(t.cls_hidden.data(), params.arena.at("cls.w2"), params.arena.at("cls.b2"),
               logits, 1, m, 2);
        t.cls_logits = {logits[0], logits[1]};
        double mx = std::max(logits[0], logits[1]);
        double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
        pred.p_cls = {e0 / (e0 + e1), e1 / (e0 + e1)};
    }

    // loc head: one affine layer scoring every position
    {
        const std::vector<double>& feat = t.layers[wiring.loc].x2;
        const double* w = params.arena.at("loc.w");
        double b = *params.arena.at("loc.b");
        t.loc_scores.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.loc_scores[i] = kernels::dot(feat.data() + i * m, w, m) + b;
        }
        pred.p_loc = masked_softmax(t.loc_scores, sample.loc_mask);
    }

    // rep head
    if (config.kind == BugKind::WrongBinop) {
        const double* feat = t.layers[wiring.rep].x2.data();  // row 0
        t.rep_hidden_pre.resize(m);
        linear(feat, params.arena.at("rep.w1"), params.arena.at("rep.b1"),
               t.rep_hidden_pre.data(), 1, m, m);
        t.rep_hidden.resize(m);
        for (std::size_t j = 0; j < m; ++j) t.rep_hidden[j] = gelu(t.rep_hidden_pre[j]);
        t.rep_scores.resize(kOperatorVocabSize);
        linear(t.rep_hidden.data(), params.arena.at("rep.w2"), params.arena.at("rep.b2"),
               t.rep_scores.data(), 1, m, kOperatorVocabSize);
        pred.p_rep = masked_softmax(t.rep_scores, sample.rep_mask);
    } else {
        const std::vector<double>& feat = t.layers[wiring.rep].x2;
        const double* w = params.arena.at("rep.w");
        double b = *params.arena.at("rep.b");
        t.rep_scores.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.rep_scores[i] = kernels::dot(feat.data() + i * m, w, m) + b;
        }
        pred.p_rep = masked_softmax(t.rep_scores, sample.rep_mask);
    }

    t.pred = pred;
    return pred;
}

int classify(const Prediction& pred, double threshold) {
    return pred.p_cls[1] >= threshold ? 1 : -1;
}

Pointed point(const Prediction& pred) {
    Pointed out;
    for (std::size_t i = 1; i < pred.p_loc.size(); ++i) {
        if (pred.p_loc[i] > pred.p_loc[out.loc]) out.loc = i;
    }
    for (std::size_t i = 1; i < pred.p_rep.size(); ++i) {
        if (pred.p_rep[i] > pred.p_rep[out.rep]) out.rep = i;
    }
    return out;
}

}  // namespace driftlab
