#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtaad/attention.hpp"
#include "dtaad/tcn.hpp"

namespace dtaad {

/// Full model configuration. Defaults follow the shipped hyperparameters:
/// window 10, loss weight 0.8, local kernel 3 with 2 layers, global kernel 4
/// with base-2 dilation at the minimum covering depth, one encoder layer,
/// 16 FFN hidden units, dropout 0.2.
struct DtaadConfig {
    int window = 10;  // K
    int dims = 1;     // m == d_model
    double lambda = 0.8;
    TcnConfig local_tcn{TcnKind::local, 3, 2, 2, 1};
    TcnConfig global_tcn{TcnKind::global, 4, 2, 2, 1};
    int encoder_layers = 1;
    int ffn_hidden = 16;
    int heads = 0;  // 0 => one head per series dimension (d_k = d_v = 1)
    double dropout = 0.2;
    double leak = 0.01;
    double layer_norm_eps = 1e-5;
    bool feedback_at_inference = true;
    bool use_local_tcn = true;   // ablation switch: bypass the local stack
    bool use_global_tcn = true;  // ablation switch: bypass the global stack

    int head_count() const { return heads > 0 ? heads : dims; }

    /// Re-derives channel counts and the global stack depth from (window,
    /// dims, kernel, base). Call after changing any of those.
    void finalize() {
        local_tcn.kind = TcnKind::local;
        global_tcn.kind = TcnKind::global;
        local_tcn.channels = dims;
        global_tcn.channels = dims;
        global_tcn.num_layers = min_layers_dilated(window, global_tcn.kernel_size, global_tcn.dilation_base);
    }

    static DtaadConfig make(int dims, int window = 10) {
        DtaadConfig cfg;
        cfg.dims = dims;
        cfg.window = window;
        cfg.finalize();
        return cfg;
    }

    void validate() const {
        if (window < 1) throw ConfigError("window size must be >= 1");
        if (dims < 1) throw ConfigError("series dimensionality must be >= 1");
        if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("loss weight lambda must lie in (0,1)");
        if (encoder_layers < 1) throw ConfigError("encoder layer count must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
        if (head_count() < 1 || dims % head_count() != 0)
            throw ConfigError("head count must divide the model dimension");
    }
};

template <class E>
struct DtaadParamsT {
    TcnStackParamsT<E> local_tcn, global_tcn;
    std::vector<EncoderLayerParamsT<E>> enc1, enc2;
    DecoderHeadParamsT<E> dec1, dec2;
};

template <class S>
using DtaadParams = DtaadParamsT<ParamArray<S>>;
template <class S>
using BoundDtaadParams = DtaadParamsT<Tensor<S>>;

template <class TA, class TB, class F>
void visit_dtaad_params(TA&& a, TB&& b, F&& f) {
    visit_tcn_params(a.local_tcn, b.local_tcn, "local_tcn", f);
    visit_tcn_params(a.global_tcn, b.global_tcn, "global_tcn", f);
    for (std::size_t i = 0; i < a.enc1.size(); ++i)
        visit_encoder_params(a.enc1[i], b.enc1[i], "enc1." + std::to_string(i), f);
    for (std::size_t i = 0; i < a.enc2.size(); ++i)
        visit_encoder_params(a.enc2[i], b.enc2[i], "enc2." + std::to_string(i), f);
    visit_decoder_params(a.dec1, b.dec1, "dec1", f);
    visit_decoder_params(a.dec2, b.dec2, "dec2", f);
}

template <class B, class A>
DtaadParamsT<B> structure_like(const DtaadParamsT<A>& src) {
    DtaadParamsT<B> out;
    out.local_tcn = structure_like<B>(src.local_tcn);
    out.global_tcn = structure_like<B>(src.global_tcn);
    out.enc1.resize(src.enc1.size());
    for (std::size_t i = 0; i < src.enc1.size(); ++i) out.enc1[i] = structure_like<B>(src.enc1[i]);
    out.enc2.resize(src.enc2.size());
    for (std::size_t i = 0; i < src.enc2.size(); ++i) out.enc2[i] = structure_like<B>(src.enc2[i]);
    out.dec1 = structure_like<B>(src.dec1);
    out.dec2 = structure_like<B>(src.dec2);
    return out;
}

/// Deterministic random initialization: uniform fan-in bounds for conv and
/// linear weights, g = ||v|| for weight-normed kernels, zero biases.
template <class S>
DtaadParams<S> init_params(const DtaadConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    DtaadParams<S> p;
    p.local_tcn = init_tcn_params<S>(cfg.local_tcn, rng);
    p.global_tcn = init_tcn_params<S>(cfg.global_tcn, rng);
    for (int i = 0; i < cfg.encoder_layers; ++i)
        p.enc1.push_back(init_encoder_params<S>(cfg.dims, cfg.head_count(), cfg.ffn_hidden, rng));
    for (int i = 0; i < cfg.encoder_layers; ++i)
        p.enc2.push_back(init_encoder_params<S>(cfg.dims, cfg.head_count(), cfg.ffn_hidden, rng));
    p.dec1 = init_decoder_params<S>(cfg.dims, cfg.ffn_hidden, rng);
    p.dec2 = init_decoder_params<S>(cfg.dims, cfg.ffn_hidden, rng);
    return p;
}

template <class S>
BoundDtaadParams<S> bind_params(Tape<S>& tape, const DtaadParams<S>& params, bool requires_grad) {
    BoundDtaadParams<S> bound = structure_like<Tensor<S>>(params);
    visit_dtaad_params(params, bound, [&](const std::string&, const ParamArray<S>& p, Tensor<S>& t) {
        t = tape.leaf(p.shape, p.values, requires_grad);
    });
    return bound;
}

/// Copies leaf gradients out of a bound parameter set (after backward).
template <class S>
DtaadParams<S> extract_grads(const DtaadParams<S>& like, const BoundDtaadParams<S>& bound) {
    DtaadParams<S> grads = structure_like<ParamArray<S>>(like);
    visit_dtaad_params(grads, bound, [](const std::string&, ParamArray<S>& g, const Tensor<S>& t) {
        g = ParamArray<S>(t.shape());
        if (t.has_grad()) g.values = t.grad();
    });
    return grads;
}

template <class S>
std::int64_t param_count(const DtaadParams<S>& params) {
    std::int64_t n = 0;
    visit_dtaad_params(params, params,
                       [&](const std::string&, const ParamArray<S>& p, const ParamArray<S>&) { n += p.size(); });
    return n;
}

template <class S>
Vector<S> pack_params(const DtaadParams<S>& params) {
    Vector<S> flat(param_count(params));
    std::int64_t off = 0;
    visit_dtaad_params(params, params, [&](const std::string&, const ParamArray<S>& p, const ParamArray<S>&) {
        flat.segment(off, p.size()) = p.values;
        off += p.size();
    });
    return flat;
}

template <class S>
void unpack_params(const Vector<S>& flat, DtaadParams<S>& params) {
    if (flat.size() != param_count(params))
        throw ShapeError("unpack_params: flat vector has " + std::to_string(flat.size()) + " entries, expected " +
                         std::to_string(param_count(params)));
    std::int64_t off = 0;
    visit_dtaad_params(params, params, [&](const std::string&, ParamArray<S>& p, ParamArray<S>&) {
        p.values = flat.segment(off, p.size());
        off += p.size();
    });
}

template <class To, class From>
DtaadParams<To> params_cast(const DtaadParams<From>& params) {
    DtaadParams<To> out = structure_like<ParamArray<To>>(params);
    visit_dtaad_params(out, params, [](const std::string&, ParamArray<To>& o, const ParamArray<From>& p) {
        o = param_cast<From, To>(p);
    });
    return out;
}

template <class S>
struct ForwardResult {
    Matrix<S> local_prediction;   // O2, the decoder-2 output
    Matrix<S> global_prediction;  // O1-hat, the feedback-path decoder-1 output
    S loss_global;                // L1 = MSE(O1-hat, X)
    S loss_local;                 // L2 = MSE(O2, X)
    S loss;                       // lambda*L1 + (1-lambda)*L2
};

template <class S>
struct InferenceResult {
    Matrix<S> prediction;  // O1-hat
    Vector<S> scores;      // per-dimension squared error at the last position
};

namespace detail {

template <class S>
void check_window(const DtaadConfig& cfg, const Matrix<S>& window) {
    if (window.rows() != cfg.window || window.cols() != cfg.dims)
        throw InvalidArgument("window must be [" + std::to_string(cfg.window) + " x " + std::to_string(cfg.dims) +
                              "], got [" + std::to_string(window.rows()) + " x " + std::to_string(window.cols()) +
                              "]");
}

/// Dual-path pass: O2 = D2(E2(LocalTCN(X) + PE)); the local prediction is fed
/// back so O1-hat = D1(E1(GlobalTCN(X + O2) + PE)). Gradients flow through the
/// feedback sum into both paths.
template <class S>
ForwardResult<S> forward_impl(const DtaadConfig& cfg, const DtaadParams<S>& params, const Matrix<S>& window,
                              Rng& rng, bool training, DtaadParams<S>* grads) {
    check_window(cfg, window);
    const S leak = static_cast<S>(cfg.leak);
    const S eps = static_cast<S>(cfg.layer_norm_eps);

    Tape<S> tape;
    BoundDtaadParams<S> bound = bind_params(tape, params, grads != nullptr);
    Tensor<S> x = tape.constant_matrix(window);
    Tensor<S> pe = tape.constant_matrix(positional_encoding<S>(cfg.window, cfg.dims));

    Tensor<S> local_out =
        cfg.use_local_tcn
            ? tcn_forward(cfg.local_tcn, bound.local_tcn, x, leak, cfg.dropout, training, rng)
            : x;
    Tensor<S> e2 = add(local_out, pe);
    for (const auto& layer : bound.enc2) e2 = encoder_layer(e2, layer, leak, eps, cfg.dropout, training, rng);
    Tensor<S> o2 = decoder_head(e2, bound.dec2, leak);

    Tensor<S> feedback = add(x, o2);
    Tensor<S> global_out =
        cfg.use_global_tcn
            ? tcn_forward(cfg.global_tcn, bound.global_tcn, feedback, leak, cfg.dropout, training, rng)
            : feedback;
    Tensor<S> e1 = add(global_out, pe);
    for (const auto& layer : bound.enc1) e1 = encoder_layer(e1, layer, leak, eps, cfg.dropout, training, rng);
    Tensor<S> o1 = decoder_head(e1, bound.dec1, leak);

    Tensor<S> l1 = mse(o1, x);
    Tensor<S> l2 = mse(o2, x);
    Tensor<S> loss = add(scale(l1, static_cast<S>(cfg.lambda)), scale(l2, S(1) - static_cast<S>(cfg.lambda)));

    ForwardResult<S> result;
    result.local_prediction = o2.matrix();
    result.global_prediction = o1.matrix();
    result.loss_global = l1.scalar();
    result.loss_local = l2.scalar();
    result.loss = loss.scalar();
    if (grads != nullptr) {
        tape.backward(loss);
        *grads = extract_grads(params, bound);
    }
    return result;
}

}  // namespace detail

/// Training pass with dropout active; fills per-parameter gradients of the
/// combined loss when grads is non-null.
template <class S>
ForwardResult<S> forward_training(const DtaadConfig& cfg, const DtaadParams<S>& params, const Matrix<S>& window,
                                  Rng& rng, DtaadParams<S>* grads = nullptr) {
    return detail::forward_impl(cfg, params, window, rng, true, grads);
}

/// Loss evaluation with dropout disabled (deterministic).
template <class S>
ForwardResult<S> forward_eval(const DtaadConfig& cfg, const DtaadParams<S>& params, const Matrix<S>& window) {
    Rng unused(0);
    return detail::forward_impl(cfg, params, window, unused, false, static_cast<DtaadParams<S>*>(nullptr));
}

/// Online inference: decoder 1 only, dropout off. With feedback_at_inference
/// the local prediction is computed first and added to the input, matching the
/// global path's training-time input distribution; without it the global path
/// sees the raw window. Score s_j is the squared error at the last position.
template <class S>
InferenceResult<S> forward_inference(const DtaadConfig& cfg, const DtaadParams<S>& params,
                                     const Matrix<S>& window) {
    detail::check_window(cfg, window);
    const S leak = static_cast<S>(cfg.leak);
    const S eps = static_cast<S>(cfg.layer_norm_eps);
    Rng unused(0);

    Tape<S> tape;
    BoundDtaadParams<S> bound = bind_params(tape, params, false);
    Tensor<S> x = tape.constant_matrix(window);
    Tensor<S> pe = tape.constant_matrix(positional_encoding<S>(cfg.window, cfg.dims));

    Tensor<S> global_in = x;
    if (cfg.feedback_at_inference) {
        Tensor<S> local_out =
            cfg.use_local_tcn ? tcn_forward(cfg.local_tcn, bound.local_tcn, x, leak, 0.0, false, unused) : x;
        Tensor<S> e2 = add(local_out, pe);
        for (const auto& layer : bound.enc2) e2 = encoder_layer(e2, layer, leak, eps, 0.0, false, unused);
        Tensor<S> o2 = decoder_head(e2, bound.dec2, leak);
        global_in = add(x, o2);
    }
    Tensor<S> global_out =
        cfg.use_global_tcn
            ? tcn_forward(cfg.global_tcn, bound.global_tcn, global_in, leak, 0.0, false, unused)
            : global_in;
    Tensor<S> e1 = add(global_out, pe);
    for (const auto& layer : bound.enc1) e1 = encoder_layer(e1, layer, leak, eps, 0.0, false, unused);
    Tensor<S> o1 = decoder_head(e1, bound.dec1, leak);

    InferenceResult<S> result;
    result.prediction = o1.matrix();
    result.scores.resize(cfg.dims);
    const int last = cfg.window - 1;
    for (int j = 0; j < cfg.dims; ++j) {
        const S diff = result.prediction(last, j) - window(last, j);
        result.scores[j] = diff * diff;
    }
    return result;
}

}  // namespace dtaad
