#pragma once

// Brute-force dependency oracles for temporal convolution stacks, independent
// of the closed-form receptive-field formulas and of the conv implementation.

#include <vector>

#include "dtaad/model.hpp"
#include "dtaad/tcn.hpp"

namespace dtaad::testing {

/// Backward offsets (distance into the past) the last output of a conv stack
/// depends on, by exhaustive index propagation. dep[o] == 1 iff the output
/// depends on the input o steps back.
inline std::vector<char> dependency_offsets(const std::vector<int>& dilations, int kernel) {
    long long max_off = 0;
    for (int d : dilations) max_off += static_cast<long long>(d) * (kernel - 1);
    std::vector<char> dep(static_cast<std::size_t>(max_off) + 1, 0);
    dep[0] = 1;
    for (int d : dilations) {
        std::vector<char> next(dep.size(), 0);
        for (std::size_t o = 0; o < dep.size(); ++o) {
            if (!dep[o]) continue;
            for (int j = 0; j < kernel; ++j) next[o + static_cast<std::size_t>(j) * d] = 1;
        }
        dep.swap(next);
    }
    return dep;
}

inline std::vector<int> stack_dilations(const TcnConfig& cfg) {
    std::vector<int> ds(static_cast<std::size_t>(cfg.num_layers));
    for (int i = 0; i < cfg.num_layers; ++i) ds[static_cast<std::size_t>(i)] = tcn_layer_geometry(cfg, i).dilation;
    return ds;
}

/// Receptive-field span (width) of the stack: largest backward offset + 1.
inline long long oracle_width(const std::vector<int>& dilations, int kernel) {
    const auto dep = dependency_offsets(dilations, kernel);
    return static_cast<long long>(dep.size());
}

/// True iff the last output of a length-l window depends on every position.
inline bool oracle_full_coverage(const std::vector<int>& dilations, int kernel, int window_len) {
    const auto dep = dependency_offsets(dilations, kernel);
    for (int o = 0; o < window_len; ++o)
        if (o >= static_cast<int>(dep.size()) || !dep[static_cast<std::size_t>(o)]) return false;
    return true;
}

/// Smallest layer count whose footprint covers the window, by incremental
/// search; -1 when no depth up to max_layers achieves coverage (holes).
inline int oracle_min_layers(TcnConfig cfg, int window_len, int max_layers = 64) {
    for (int n = 0; n <= max_layers; ++n) {
        cfg.num_layers = n;
        if (oracle_full_coverage(stack_dilations(cfg), cfg.kernel_size, window_len)) return n;
    }
    return -1;
}

/// A double-precision stack with averaging kernels (every tap 1/k, bias 0);
/// monotone and well-conditioned, so perturbation effects stay detectable.
inline TcnStackParams<double> averaging_stack(const TcnConfig& cfg) {
    TcnStackParams<double> params;
    params.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    const int c = cfg.channels;
    const int k = cfg.kernel_size;
    for (auto& layer : params.layers) {
        layer.v = ParamArray<double>({c, c, k});
        layer.v.values.setConstant(1.0 / k);
        layer.g = ParamArray<double>({c});
        const std::int64_t block = static_cast<std::int64_t>(c) * k;
        for (int ch = 0; ch < c; ++ch)
            layer.g.values[ch] = layer.v.values.segment(ch * block, block).norm();
        layer.bias = ParamArray<double>({c});
    }
    return params;
}

/// One forward pass of a stack over a [K x channels] window, dropout off.
inline MatrixD run_stack(const TcnConfig& cfg, const TcnStackParams<double>& params, const MatrixD& window) {
    Tape<double> tape;
    BoundTcnStack<double> bound = structure_like<Tensor<double>>(params);
    visit_tcn_params(params, bound, "tcn", [&](const std::string&, const ParamArray<double>& p, Tensor<double>& t) {
        t = tape.leaf(p.shape, p.values, false);
    });
    Rng unused(0);
    Tensor<double> x = tape.constant_matrix(window);
    Tensor<double> y = tcn_forward(cfg, bound, x, 0.01, 0.0, false, unused);
    return y.matrix();
}

}  // namespace dtaad::testing
