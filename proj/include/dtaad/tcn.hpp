#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtaad/ops.hpp"
#include "dtaad/params.hpp"

namespace dtaad {

enum class TcnKind { local, global };

/// Geometry of one temporal convolution stack. Channels are preserved at the
/// series dimensionality m; every layer keeps the input length.
struct TcnConfig {
    TcnKind kind = TcnKind::local;
    int kernel_size = 3;
    int dilation_base = 2;  // used by the global (dilated) kind only
    int num_layers = 2;
    int channels = 1;
};

/// Minimum layer count for a dilation-1 causal stack to cover a window of
/// length l: ceil((l-1)/(k-1)).
inline int min_layers_causal(int window_len, int kernel_size) {
    if (window_len < 1) throw InvalidArgument("min_layers_causal: window length must be >= 1");
    if (kernel_size < 2) throw InvalidArgument("min_layers_causal: kernel size must be >= 2");
    return (window_len - 1 + kernel_size - 2) / (kernel_size - 1);
}

/// Receptive-field width of an n-layer stack with base-b exponential dilation:
/// 1 + (k-1)(b^n - 1)/(b-1). Exact integer evaluation.
inline long long receptive_width(int kernel_size, int base, int num_layers) {
    if (kernel_size < 2) throw InvalidArgument("receptive_width: kernel size must be >= 2");
    if (base < 2) throw InvalidArgument("receptive_width: dilation base must be >= 2");
    if (num_layers < 0) throw InvalidArgument("receptive_width: layer count must be >= 0");
    long long width = 1;
    long long dilation = 1;
    for (int i = 0; i < num_layers; ++i) {
        width += static_cast<long long>(kernel_size - 1) * dilation;
        dilation *= base;
    }
    return width;
}

/// Minimum layer count for a base-b dilated stack whose receptive width covers
/// a window of length l; equals ceil(log_b((l-1)(b-1)/(k-1) + 1)).
inline int min_layers_dilated(int window_len, int kernel_size, int base) {
    if (window_len < 1) throw InvalidArgument("min_layers_dilated: window length must be >= 1");
    if (kernel_size < 2) throw InvalidArgument("min_layers_dilated: kernel size must be >= 2");
    if (base < 2) throw InvalidArgument("min_layers_dilated: dilation base must be >= 2");
    if (kernel_size < base)
        warn("min_layers_dilated: kernel size " + std::to_string(kernel_size) + " < dilation base " +
             std::to_string(base) + " leaves holes in the receptive field");
    long long covered = 0;
    long long dilation = 1;
    int n = 0;
    while (covered < window_len - 1) {
        covered += static_cast<long long>(kernel_size - 1) * dilation;
        dilation *= base;
        ++n;
    }
    return n;
}

struct TcnLayerGeometry {
    int dilation;
    int left_pad;
};

/// Layer index is 0-based. Local stacks use dilation 1 and pad k-1; global
/// stacks use dilation b^i and pad b^i*(k-1).
inline TcnLayerGeometry tcn_layer_geometry(const TcnConfig& cfg, int layer) {
    int dilation = 1;
    if (cfg.kind == TcnKind::global)
        for (int i = 0; i < layer; ++i) dilation *= cfg.dilation_base;
    return {dilation, dilation * (cfg.kernel_size - 1)};
}

template <class E>
struct ConvLayerParamsT {
    E v;     // raw direction kernel [C x C x k]
    E g;     // per-output-channel magnitude [C]
    E bias;  // [C]
};

template <class E>
struct TcnStackParamsT {
    std::vector<ConvLayerParamsT<E>> layers;
};

template <class S>
using TcnStackParams = TcnStackParamsT<ParamArray<S>>;
template <class S>
using BoundTcnStack = TcnStackParamsT<Tensor<S>>;

/// Walks two structurally identical stacks in lockstep, calling
/// f(name, a_elem, b_elem) in a fixed order. Used for binding parameters onto
/// tapes, gradient extraction, flattening and checkpointing.
template <class TA, class TB, class F>
void visit_tcn_params(TA&& a, TB&& b, const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        f(base + ".v", a.layers[i].v, b.layers[i].v);
        f(base + ".g", a.layers[i].g, b.layers[i].g);
        f(base + ".bias", a.layers[i].bias, b.layers[i].bias);
    }
}

template <class B, class A>
TcnStackParamsT<B> structure_like(const TcnStackParamsT<A>& src) {
    TcnStackParamsT<B> out;
    out.layers.resize(src.layers.size());
    return out;
}

/// Per-layer pipeline conv1d -> weight-normed kernel -> leaky_relu -> dropout.
/// Input and output are [channels x length]; the length is preserved.
template <class S>
Tensor<S> tcn_forward_channels(const TcnConfig& cfg, const BoundTcnStack<S>& stack, Tensor<S> x, S leak,
                               double dropout_p, bool training, Rng& rng) {
    if (x.rank() != 2 || x.dim(0) != cfg.channels)
        throw InvalidArgument("tcn: expected " + std::to_string(cfg.channels) + " channels, got " +
                              shape_str(x.shape()));
    for (std::size_t layer = 0; layer < stack.layers.size(); ++layer) {
        const TcnLayerGeometry geom = tcn_layer_geometry(cfg, static_cast<int>(layer));
        const auto& p = stack.layers[layer];
        Tensor<S> w = weight_norm(p.v, p.g);
        x = conv1d(x, w, p.bias, geom.dilation, geom.left_pad);
        x = leaky_relu(x, leak);
        x = dropout(x, dropout_p, training, rng);
    }
    return x;
}

/// Time-major wrapper: window is [K x m], returned as [K x m].
template <class S>
Tensor<S> tcn_forward(const TcnConfig& cfg, const BoundTcnStack<S>& stack, const Tensor<S>& window, S leak,
                      double dropout_p, bool training, Rng& rng) {
    Tensor<S> channels_first = transpose(window);
    Tensor<S> y = tcn_forward_channels(cfg, stack, channels_first, leak, dropout_p, training, rng);
    return transpose(y);
}

/// Uniform fan-in initialization; weight-norm magnitude starts at ||v|| so the
/// effective kernel equals v at initialization. Biases start at zero.
template <class S>
TcnStackParams<S> init_tcn_params(const TcnConfig& cfg, Rng& rng) {
    TcnStackParams<S> params;
    params.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    const int c = cfg.channels;
    const int k = cfg.kernel_size;
    const double bound = 1.0 / std::sqrt(static_cast<double>(c) * k);
    for (auto& layer : params.layers) {
        layer.v = ParamArray<S>({c, c, k});
        for (std::int64_t i = 0; i < layer.v.size(); ++i)
            layer.v.values[i] = static_cast<S>(rng.uniform(-bound, bound));
        layer.g = ParamArray<S>({c});
        const std::int64_t block = static_cast<std::int64_t>(c) * k;
        for (int ch = 0; ch < c; ++ch)
            layer.g.values[ch] = layer.v.values.segment(ch * block, block).norm();
        layer.bias = ParamArray<S>({c});
    }
    return params;
}

}  // namespace dtaad
