#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dtaad/ops.hpp"
#include "dtaad/params.hpp"

namespace dtaad {

/// Sinusoidal positional encoding: PE(pos, 2i) = sin(pos / 10000^(2i/d)),
/// PE(pos, 2i+1) = cos(pos / 10000^(2i/d)).
template <class S>
Matrix<S> positional_encoding(int seq_len, int d_model) {
    if (seq_len < 1 || d_model < 1) throw InvalidArgument("positional_encoding: dimensions must be positive");
    Matrix<S> pe(seq_len, d_model);
    for (int pos = 0; pos < seq_len; ++pos)
        for (int j = 0; j < d_model; ++j) {
            const double angle = pos / std::pow(10000.0, 2.0 * (j / 2) / d_model);
            pe(pos, j) = static_cast<S>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    return pe;
}

/// Scaled dot-product attention: softmax_rows(Q K^T / sqrt(d_k)) V.
template <class S>
Tensor<S> attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0))
        throw InvalidArgument("attention: inconsistent shapes q=" + shape_str(q.shape()) +
                              " k=" + shape_str(k.shape()) + " v=" + shape_str(v.shape()));
    const S inv_sqrt_dk = S(1) / static_cast<S>(std::sqrt(static_cast<double>(q.dim(1))));
    Tensor<S> scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
    return matmul(softmax_rows(scores), v);
}

template <class E>
struct AttentionParamsT {
    std::vector<E> wq, wk, wv;  // one [d_model x d_k] projection per head
    E wo;                       // [h*d_v x d_model]
};

template <class E>
struct FfnParamsT {
    E w1, b1, w2, b2;  // two linear maps with a leaky-relu between
};

template <class E>
struct EncoderLayerParamsT {
    AttentionParamsT<E> attn;
    FfnParamsT<E> ffn;
    E ln1_gain, ln1_bias;
    E ln2_gain, ln2_bias;
};

template <class E>
struct DecoderHeadParamsT {
    FfnParamsT<E> res_ffn;  // residual branch, Ii3 = Ii2 + FFN(Ii2)
    FfnParamsT<E> out_ffn;  // output branch feeding the sigmoid
};

template <class S>
using AttentionParams = AttentionParamsT<ParamArray<S>>;
template <class S>
using BoundAttention = AttentionParamsT<Tensor<S>>;
template <class S>
using EncoderLayerParams = EncoderLayerParamsT<ParamArray<S>>;
template <class S>
using BoundEncoderLayer = EncoderLayerParamsT<Tensor<S>>;
template <class S>
using DecoderHeadParams = DecoderHeadParamsT<ParamArray<S>>;
template <class S>
using BoundDecoderHead = DecoderHeadParamsT<Tensor<S>>;

template <class TA, class TB, class F>
void visit_attention_params(TA&& a, TB&& b, const std::string& prefix, F&& f) {
    for (std::size_t h = 0; h < a.wq.size(); ++h) {
        const std::string head = prefix + ".head" + std::to_string(h);
        f(head + ".wq", a.wq[h], b.wq[h]);
        f(head + ".wk", a.wk[h], b.wk[h]);
        f(head + ".wv", a.wv[h], b.wv[h]);
    }
    f(prefix + ".wo", a.wo, b.wo);
}

template <class TA, class TB, class F>
void visit_ffn_params(TA&& a, TB&& b, const std::string& prefix, F&& f) {
    f(prefix + ".w1", a.w1, b.w1);
    f(prefix + ".b1", a.b1, b.b1);
    f(prefix + ".w2", a.w2, b.w2);
    f(prefix + ".b2", a.b2, b.b2);
}

template <class TA, class TB, class F>
void visit_encoder_params(TA&& a, TB&& b, const std::string& prefix, F&& f) {
    visit_attention_params(a.attn, b.attn, prefix + ".attn", f);
    visit_ffn_params(a.ffn, b.ffn, prefix + ".ffn", f);
    f(prefix + ".ln1_gain", a.ln1_gain, b.ln1_gain);
    f(prefix + ".ln1_bias", a.ln1_bias, b.ln1_bias);
    f(prefix + ".ln2_gain", a.ln2_gain, b.ln2_gain);
    f(prefix + ".ln2_bias", a.ln2_bias, b.ln2_bias);
}

template <class TA, class TB, class F>
void visit_decoder_params(TA&& a, TB&& b, const std::string& prefix, F&& f) {
    visit_ffn_params(a.res_ffn, b.res_ffn, prefix + ".res_ffn", f);
    visit_ffn_params(a.out_ffn, b.out_ffn, prefix + ".out_ffn", f);
}

template <class B, class A>
AttentionParamsT<B> structure_like(const AttentionParamsT<A>& src) {
    AttentionParamsT<B> out;
    out.wq.resize(src.wq.size());
    out.wk.resize(src.wk.size());
    out.wv.resize(src.wv.size());
    return out;
}

template <class B, class A>
EncoderLayerParamsT<B> structure_like(const EncoderLayerParamsT<A>& src) {
    EncoderLayerParamsT<B> out;
    out.attn = structure_like<B>(src.attn);
    return out;
}

template <class B, class A>
DecoderHeadParamsT<B> structure_like(const DecoderHeadParamsT<A>& /*src*/) {
    return {};
}

/// Self-attention over h heads followed by the output projection.
template <class S>
Tensor<S> multi_head(const Tensor<S>& x, const BoundAttention<S>& p) {
    std::vector<Tensor<S>> heads;
    heads.reserve(p.wq.size());
    for (std::size_t h = 0; h < p.wq.size(); ++h)
        heads.push_back(attention(matmul(x, p.wq[h]), matmul(x, p.wk[h]), matmul(x, p.wv[h])));
    return matmul(concat_cols(heads), p.wo);
}

/// FFN(z) = leaky_relu(z W1 + b1) W2 + b2.
template <class S>
Tensor<S> ffn_forward(const Tensor<S>& x, const FfnParamsT<Tensor<S>>& p, S leak) {
    Tensor<S> hidden = leaky_relu(add_rowvec(matmul(x, p.w1), p.b1), leak);
    return add_rowvec(matmul(hidden, p.w2), p.b2);
}

/// I1 = LayerNorm(I + MultiHead(I,I,I)); I2 = LayerNorm(I1 + FFN(I1)).
/// Dropout follows each sublayer when training.
template <class S>
Tensor<S> encoder_layer(const Tensor<S>& x, const BoundEncoderLayer<S>& p, S leak, S eps, double dropout_p,
                        bool training, Rng& rng) {
    Tensor<S> attended = dropout(multi_head(x, p.attn), dropout_p, training, rng);
    Tensor<S> i1 = layer_norm(add(x, attended), p.ln1_gain, p.ln1_bias, eps);
    Tensor<S> fed = dropout(ffn_forward(i1, p.ffn, leak), dropout_p, training, rng);
    return layer_norm(add(i1, fed), p.ln2_gain, p.ln2_bias, eps);
}

/// I3 = I2 + FFN(I2); O = Sigmoid(FFN(I3)), so outputs lie in (0,1).
template <class S>
Tensor<S> decoder_head(const Tensor<S>& x, const BoundDecoderHead<S>& p, S leak) {
    Tensor<S> i3 = add(x, ffn_forward(x, p.res_ffn, leak));
    return sigmoid(ffn_forward(i3, p.out_ffn, leak));
}

template <class S>
ParamArray<S> uniform_init(Shape shape, int fan_in, Rng& rng) {
    ParamArray<S> p(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < p.size(); ++i) p.values[i] = static_cast<S>(rng.uniform(-bound, bound));
    return p;
}

template <class S>
AttentionParams<S> init_attention_params(int d_model, int heads, Rng& rng) {
    if (heads < 1 || d_model % heads != 0)
        throw InvalidArgument("attention: head count " + std::to_string(heads) + " must divide d_model " +
                              std::to_string(d_model));
    const int d_k = d_model / heads;
    AttentionParams<S> p;
    for (int h = 0; h < heads; ++h) {
        p.wq.push_back(uniform_init<S>({d_model, d_k}, d_model, rng));
        p.wk.push_back(uniform_init<S>({d_model, d_k}, d_model, rng));
        p.wv.push_back(uniform_init<S>({d_model, d_k}, d_model, rng));
    }
    p.wo = uniform_init<S>({d_model, d_model}, d_model, rng);
    return p;
}

template <class S>
FfnParamsT<ParamArray<S>> init_ffn_params(int d_model, int hidden, Rng& rng) {
    FfnParamsT<ParamArray<S>> p;
    p.w1 = uniform_init<S>({d_model, hidden}, d_model, rng);
    p.b1 = ParamArray<S>({hidden});
    p.w2 = uniform_init<S>({hidden, d_model}, hidden, rng);
    p.b2 = ParamArray<S>({d_model});
    return p;
}

template <class S>
EncoderLayerParams<S> init_encoder_params(int d_model, int heads, int ffn_hidden, Rng& rng) {
    EncoderLayerParams<S> p;
    p.attn = init_attention_params<S>(d_model, heads, rng);
    p.ffn = init_ffn_params<S>(d_model, ffn_hidden, rng);
    p.ln1_gain = ParamArray<S>({d_model});
    p.ln1_gain.values.setOnes();
    p.ln1_bias = ParamArray<S>({d_model});
    p.ln2_gain = ParamArray<S>({d_model});
    p.ln2_gain.values.setOnes();
    p.ln2_bias = ParamArray<S>({d_model});
    return p;
}

template <class S>
DecoderHeadParams<S> init_decoder_params(int d_model, int ffn_hidden, Rng& rng) {
    DecoderHeadParams<S> p;
    p.res_ffn = init_ffn_params<S>(d_model, ffn_hidden, rng);
    p.out_ffn = init_ffn_params<S>(d_model, ffn_hidden, rng);
    return p;
}

}  // namespace dtaad
