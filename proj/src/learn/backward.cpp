#include "driftlab/learn/backward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/kernels.hpp"

namespace driftlab {

namespace {

constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;
constexpr double kLogClamp = 1e-12;

double gelu_grad(double x) {
    double u = kGeluC1 * (x + kGeluC2 * x * x * x);
    double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC1 * (1.0 + 3.0 * kGeluC2 * x * x);
}

double focal_grad_py(double p_y, double gamma) {
    double log_pc = std::log(std::max(p_y, kLogClamp));
    double one_minus = 1.0 - p_y;
    double term1 = (gamma == 0.0 || log_pc == 0.0)
                       ? 0.0
                       : gamma * std::pow(one_minus, gamma - 1.0) * log_pc;
    double term2 = p_y > kLogClamp ? std::pow(one_minus, gamma) / p_y : 0.0;
    return term1 - term2;
}

// d(pointer loss)/d(scores): P_j(q − C_j), divided by q for the log variant.
std::vector<double> pointer_score_grad(const std::vector<double>& p,
                                       const std::vector<std::uint8_t>& c,
                                       bool log_variant, double weight) {
    double mass = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (c[i]) mass += p[i];
    }
    double scale = log_variant ? weight / std::max(mass, kLogClamp) : weight;
    std::vector<double> dz(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        double cj = c[j] ? 1.0 : 0.0;
        dz[j] = scale * p[j] * (mass - cj);
    }
    return dz;
}

void add_col_sums(const double* x, double* out, std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) kernels::add(x + i * m, out, m);
}

void ln_backward(const double* dy, const double* xhat, const double* inv_std,
                 const double* g, double* d_g, double* d_b, double* dx,
                 std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* dyr = dy + i * m;
        const double* xh = xhat + i * m;
        double s = inv_std[i];
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double dxh = dyr[j] * g[j];
            d_g[j] += dyr[j] * xh[j];
            d_b[j] += dyr[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
        }
        mean_dxh /= static_cast<double>(m);
        mean_dxh_xh /= static_cast<double>(m);
        for (std::size_t j = 0; j < m; ++j) {
            dx[i * m + j] = s * (dyr[j] * g[j] - mean_dxh - xh[j] * mean_dxh_xh);
        }
    }
}

// Backward through a two-affine-layer head (GELU between): accumulates the
// head's parameter gradients and adds the input-feature gradient to dfeat.
void mlp_head_backward(const ParamArena& params, ParamArena& grads, const std::string& w1_name,
                       const std::string& b1_name, const std::string& w2_name,
                       const std::string& b2_name, const double* feat,
                       const double* hidden_pre, const double* hidden,
                       const double* dscores, std::size_t out, std::size_t m, double* dfeat) {
    const double* w1 = params.at(w1_name);
    const double* w2 = params.at(w2_name);
    double* d_w1 = grads.at(w1_name);
    double* d_b1 = grads.at(b1_name);
    double* d_w2 = grads.at(w2_name);
    double* d_b2 = grads.at(b2_name);

    std::vector<double> dhidden(m, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
        if (dscores[j] == 0.0) continue;
        kernels::axpy(dscores[j], hidden, d_w2 + j * m, m);
        d_b2[j] += dscores[j];
        kernels::axpy(dscores[j], w2 + j * m, dhidden.data(), m);
    }
    for (std::size_t j = 0; j < m; ++j) dhidden[j] *= gelu_grad(hidden_pre[j]);
    for (std::size_t r = 0; r < m; ++r) {
        if (dhidden[r] == 0.0) continue;
        kernels::axpy(dhidden[r], feat, d_w1 + r * m, m);
        d_b1[r] += dhidden[r];
        kernels::axpy(dhidden[r], w1 + r * m, dfeat, m);
    }
}

struct HeadSeeds {
    double focal_weight = 0.0;
    double pointer_weight = 0.0;
    std::vector<double> d_h_cls;  // contrastive gradient, already scaled
};

void backprop_sample(const ModelParams& params, const Sample& sample, const ForwardTrace& t,
                     const HeadSeeds& seeds, ParamArena& grads) {
    const ModelConfig& config = params.config;
    std::size_t n = t.n;
    std::size_t m = config.model_dim;
    std::size_t k = config.layers;
    const HeadWiring& wiring = t.wiring;

    std::vector<std::vector<double>> dx(k);
    for (auto& buf : dx) buf.assign(n * m, 0.0);

    // cls head
    {
        int iy = sample.label == 1 ? 1 : 0;
        double p_y = t.pred.p_cls[iy];
        double gl = focal_grad_py(p_y, config.gamma) * seeds.focal_weight;
        double dscores[2];
        for (int j = 0; j < 2; ++j) {
            double delta = j == iy ? 1.0 : 0.0;
            dscores[j] = gl * p_y * (delta - t.pred.p_cls[j]);
        }
        std::vector<double> dfeat(m, 0.0);
        mlp_head_backward(params.arena, grads, "cls.w1", "cls.b1", "cls.w2", "cls.b2",
                          t.layers[wiring.cls].x2.data(), t.cls_hidden_pre.data(),
                          t.cls_hidden.data(), dscores, 2, m, dfeat.data());
        if (!seeds.d_h_cls.empty()) kernels::add(seeds.d_h_cls.data(), dfeat.data(), m);
        kernels::add(dfeat.data(), dx[wiring.cls].data(), m);
    }

    if (seeds.pointer_weight != 0.0) {
        // loc head
        {
            std::vector<double> dz = pointer_score_grad(t.pred.p_loc, sample.loc_target,
                                                        config.log_pointer_loss,
                                                        seeds.pointer_weight);
            const double* feat = t.layers[wiring.loc].x2.data();
            const double* w = params.arena.at("loc.w");
            double* d_w = grads.at("loc.w");
            double db = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (dz[j] == 0.0) continue;
                kernels::axpy(dz[j], feat + j * m, d_w, m);
                db += dz[j];
                kernels::axpy(dz[j], w, dx[wiring.loc].data() + j * m, m);
            }
            *grads.at("loc.b") += db;
        }
        // rep head
        std::vector<double> dz = pointer_score_grad(t.pred.p_rep, sample.rep_target,
                                                    config.log_pointer_loss,
                                                    seeds.pointer_weight);
        if (config.kind == BugKind::WrongBinop) {
            std::vector<double> dfeat(m, 0.0);
            mlp_head_backward(params.arena, grads, "rep.w1", "rep.b1", "rep.w2", "rep.b2",
                              t.layers[wiring.rep].x2.data(), t.rep_hidden_pre.data(),
                              t.rep_hidden.data(), dz.data(), kOperatorVocabSize, m,
                              dfeat.data());
            kernels::add(dfeat.data(), dx[wiring.rep].data(), m);
        } else {
            const double* feat = t.layers[wiring.rep].x2.data();
            const double* w = params.arena.at("rep.w");
            double* d_w = grads.at("rep.w");
            double db = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (dz[j] == 0.0) continue;
                kernels::axpy(dz[j], feat + j * m, d_w, m);
                db += dz[j];
                kernels::axpy(dz[j], w, dx[wiring.rep].data() + j * m, m);
            }
            *grads.at("rep.b") += db;
        }
    }

    // body, top layer down
    double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t li = k; li-- > 0;) {
        const LayerTrace& lt = t.layers[li];
        std::string p = "layer" + std::to_string(li) + ".";
        const std::vector<double>& dout = dx[li];

        std::vector<double> dr2(n * m);
        ln_backward(dout.data(), lt.ln2_xhat.data(), lt.ln2_inv_std.data(),
                    params.arena.at(p + "ln2.g"), grads.at(p + "ln2.g"),
                    grads.at(p + "ln2.b"), dr2.data(), n, m);

        std::vector<double> dx1 = dr2;  // residual branch
        kernels::gemm_tn(dr2.data(), lt.g.data(), grads.at(p + "w2"), m, n, 4 * m, true);
        add_col_sums(dr2.data(), grads.at(p + "b2"), n, m);
        std::vector<double> dh(n * 4 * m);
        kernels::gemm_nn(dr2.data(), params.arena.at(p + "w2"), dh.data(), n, m, 4 * m, false);
        for (std::size_t i = 0; i < n * 4 * m; ++i) dh[i] *= gelu_grad(lt.h[i]);
        kernels::gemm_tn(dh.data(), lt.x1.data(), grads.at(p + "w1"), 4 * m, n, m, true);
        add_col_sums(dh.data(), grads.at(p + "b1"), n, 4 * m);
        kernels::gemm_nn(dh.data(), params.arena.at(p + "w1"), dx1.data(), n, 4 * m, m, true);

        std::vector<double> dr1(n * m);
        ln_backward(dx1.data(), lt.ln1_xhat.data(), lt.ln1_inv_std.data(),
                    params.arena.at(p + "ln1.g"), grads.at(p + "ln1.g"),
                    grads.at(p + "ln1.b"), dr1.data(), n, m);

        std::vector<double> dxin = dr1;  // residual branch
        kernels::gemm_tn(dr1.data(), lt.attn_out.data(), grads.at(p + "wo"), m, n, m, true);
        add_col_sums(dr1.data(), grads.at(p + "bo"), n, m);
        std::vector<double> dattn_out(n * m);
        kernels::gemm_nn(dr1.data(), params.arena.at(p + "wo"), dattn_out.data(), n, m, m,
                         false);

        std::vector<double> da(n * n);
        kernels::gemm_nt(dattn_out.data(), lt.v.data(), da.data(), n, m, n, false);
        std::vector<double> dv(n * m);
        kernels::gemm_tn(lt.attn.data(), dattn_out.data(), dv.data(), n, n, m, false);

        std::vector<double> ds(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* arow = lt.attn.data() + i * n;
            const double* darow = da.data() + i * n;
            double rowdot = kernels::dot(arow, darow, n);
            for (std::size_t j = 0; j < n; ++j) {
                ds[i * n + j] = arow[j] * (darow[j] - rowdot);
            }
        }

        std::vector<double> dq(n * m), dk(n * m);
        kernels::gemm_nn(ds.data(), lt.k.data(), dq.data(), n, n, m, false);
        kernels::scale(inv_sqrt_m, dq.data(), n * m);
        kernels::gemm_tn(ds.data(), lt.q.data(), dk.data(), n, n, m, false);
        kernels::scale(inv_sqrt_m, dk.data(), n * m);

        struct Proj {
            const std::vector<double>* d;
            const char* w;
            const char* b;
        };
        for (const Proj& pr : {Proj{&dq, "wq", "bq"}, Proj{&dk, "wk", "bk"}, Proj{&dv, "wv", "bv"}}) {
            kernels::gemm_tn(pr.d->data(), lt.x_in.data(), grads.at(p + pr.w), m, n, m, true);
            add_col_sums(pr.d->data(), grads.at(p + pr.b), n, m);
            kernels::gemm_nn(pr.d->data(), params.arena.at(p + pr.w), dxin.data(), n, m, m,
                             true);
        }

        if (li > 0) {
            kernels::add(dxin.data(), dx[li - 1].data(), n * m);
        } else {
            double* d_tok = grads.at("tok_emb");
            double* d_pos = grads.at("pos_emb");
            for (std::size_t i = 0; i < n; ++i) {
                kernels::add(dxin.data() + i * m, d_tok + t.ids[i] * m, m);
                kernels::add(dxin.data() + i * m, d_pos + i * m, m);
            }
        }
    }
}

void accumulate(LossBreakdown& into, const LossBreakdown& part, double weight) {
    into.l_cls += weight * part.l_cls;
    into.l_loc += weight * part.l_loc;
    into.l_rep += weight * part.l_rep;
    into.l_contrastive += weight * part.l_contrastive;
    into.total += weight * part.total;
}

LossBreakdown pair_breakdown(const LossBreakdown& a, const LossBreakdown& b, double beta) {
    LossBreakdown out;
    out.l_cls = a.l_cls + b.l_cls;
    out.l_loc = a.l_loc + b.l_loc;
    out.l_rep = a.l_rep + b.l_rep;
    out.l_contrastive = a.l_contrastive;  // cosine is symmetric; counted once per pair
    out.total = out.l_cls + out.l_loc + out.l_rep + beta * out.l_contrastive;
    return out;
}

void check_pair(const SamplePair& pair) {
    if (pair.original == nullptr || pair.injected == nullptr) {
        throw PhaseError("pair batch entry is missing a sample");
    }
}

void check_grads_layout(const ModelParams& params, ParamArena& grads) {
    if (grads.data.size() != params.arena.data.size()) grads = params.arena.like();
    grads.zero();
}

}  // namespace

LossBreakdown sample_batch_loss(const ModelParams& params,
                                const std::vector<const Sample*>& batch) {
    if (batch.empty()) throw PhaseError("empty batch");
    double w = 1.0 / static_cast<double>(batch.size());
    LossBreakdown mean;
    for (const Sample* sample : batch) {
        Prediction pred = forward(params, *sample);
        accumulate(mean, compute_loss(pred, nullptr, *sample, 2, params.config), w);
    }
    return mean;
}

LossBreakdown pair_batch_loss(const ModelParams& params,
                              const std::vector<SamplePair>& batch) {
    if (batch.empty()) throw PhaseError("empty batch");
    double w = 1.0 / static_cast<double>(batch.size());
    LossBreakdown mean;
    for (const SamplePair& pair : batch) {
        check_pair(pair);
        Prediction po = forward(params, *pair.original);
        Prediction pi = forward(params, *pair.injected);
        LossBreakdown a = compute_loss(po, &pi, *pair.original, 1, params.config);
        LossBreakdown b = compute_loss(pi, &po, *pair.injected, 1, params.config);
        accumulate(mean, pair_breakdown(a, b, params.config.beta), w);
    }
    return mean;
}

LossBreakdown backward_samples(const ModelParams& params,
                               const std::vector<const Sample*>& batch, ParamArena& grads) {
    if (batch.empty()) throw PhaseError("empty batch");
    check_grads_layout(params, grads);
    double w = 1.0 / static_cast<double>(batch.size());
    LossBreakdown mean;
    for (const Sample* sample : batch) {
        ForwardTrace trace;
        forward(params, *sample, &trace);
        accumulate(mean, compute_loss(trace.pred, nullptr, *sample, 2, params.config), w);
        HeadSeeds seeds;
        seeds.focal_weight = w;
        seeds.pointer_weight = sample->label == 1 ? w : 0.0;
        backprop_sample(params, *sample, trace, seeds, grads);
    }
    if (!grads.all_finite()) throw NumericsError("non-finite gradient in sample batch");
    return mean;
}

LossBreakdown backward_pairs(const ModelParams& params, const std::vector<SamplePair>& batch,
                             ParamArena& grads) {
    if (batch.empty()) throw PhaseError("empty batch");
    check_grads_layout(params, grads);
    double w = 1.0 / static_cast<double>(batch.size());
    double beta = params.config.beta;
    std::size_t m = params.config.model_dim;
    LossBreakdown mean;
    for (const SamplePair& pair : batch) {
        check_pair(pair);
        ForwardTrace to, ti;
        forward(params, *pair.original, &to);
        forward(params, *pair.injected, &ti);
        LossBreakdown a = compute_loss(to.pred, &ti.pred, *pair.original, 1, params.config);
        LossBreakdown b = compute_loss(ti.pred, &to.pred, *pair.injected, 1, params.config);
        accumulate(mean, pair_breakdown(a, b, beta), w);

        const std::vector<double>& h = to.pred.h_cls;
        const std::vector<double>& hp = ti.pred.h_cls;
        double nh = std::sqrt(kernels::dot(h.data(), h.data(), m));
        double np = std::sqrt(kernels::dot(hp.data(), hp.data(), m));
        HeadSeeds so, si;
        so.focal_weight = si.focal_weight = w;
        so.pointer_weight = pair.original->label == 1 ? w : 0.0;
        si.pointer_weight = pair.injected->label == 1 ? w : 0.0;
        if (nh != 0.0 && np != 0.0 && beta != 0.0) {
            double cos = a.l_contrastive;
            double cw = w * beta;
            so.d_h_cls.resize(m);
            si.d_h_cls.resize(m);
            for (std::size_t j = 0; j < m; ++j) {
                so.d_h_cls[j] = cw * (hp[j] / (nh * np) - cos * h[j] / (nh * nh));
                si.d_h_cls[j] = cw * (h[j] / (nh * np) - cos * hp[j] / (np * np));
            }
        }
        backprop_sample(params, *pair.original, to, so, grads);
        backprop_sample(params, *pair.injected, ti, si, grads);
    }
    if (!grads.all_finite()) throw NumericsError("non-finite gradient in pair batch");
    return mean;
}

namespace {

template <typename LossFn>
double gradient_check(ModelParams& params, const ParamArena& grads, double fd_eps,
                      const LossFn& loss_fn) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.arena.data.size(); ++i) {
        double orig = params.arena.data[i];
        params.arena.data[i] = orig + fd_eps;
        double up = loss_fn();
        params.arena.data[i] = orig - fd_eps;
        double down = loss_fn();
        params.arena.data[i] = orig;
        double numeric = (up - down) / (2.0 * fd_eps);
        double analytic = grads.data[i];
        double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-5});
        worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
    return worst;
}

}  // namespace

double gradient_check_samples(ModelParams params, const std::vector<const Sample*>& batch,
                              double fd_eps) {
    ParamArena grads = params.arena.like();
    backward_samples(params, batch, grads);
    return gradient_check(params, grads, fd_eps,
                          [&] { return sample_batch_loss(params, batch).total; });
}

double gradient_check_pairs(ModelParams params, const std::vector<SamplePair>& batch,
                            double fd_eps) {
    ParamArena grads = params.arena.like();
    backward_pairs(params, batch, grads);
    return gradient_check(params, grads, fd_eps,
                          [&] { return pair_batch_loss(params, batch).total; });
}

std::vector<SamplePair> as_pairs(const DatasetSplit& split) {
    if (split.samples.size() % 2 != 0) {
        throw ConfigError("pair-aligned split has odd sample count");
    }
    std::vector<SamplePair> pairs;
    pairs.reserve(split.samples.size() / 2);
    for (std::size_t i = 0; i + 1 < split.samples.size(); i += 2) {
        const Sample& o = split.samples[i];
        const Sample& b = split.samples[i + 1];
        if (o.label != -1 || b.label != 1) {
            throw ConfigError("pair-aligned split must alternate non-buggy/buggy samples");
        }
        pairs.push_back(SamplePair{&o, &b});
    }
    return pairs;
}

}  // namespace driftlab
