#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dtaad/rng.hpp"
#include "dtaad/tensor.hpp"

namespace dtaad {

namespace detail {

template <class S>
Tape<S>* same_tape(std::initializer_list<Tensor<S>> ts) {
    Tape<S>* tape = nullptr;
    for (const Tensor<S>& t : ts) {
        if (!t.valid() || t.tape() == nullptr) throw InvalidArgument("op on a detached tensor");
        if (tape == nullptr) tape = t.tape();
        if (t.tape() != tape) throw InvalidArgument("op inputs belong to different tapes");
    }
    return tape;
}

template <class S>
bool any_requires_grad(std::initializer_list<Tensor<S>> ts) {
    for (const Tensor<S>& t : ts)
        if (t.requires_grad()) return true;
    return false;
}

}  // namespace detail

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    Tape<S>* tape = detail::same_tape<S>({a, b});
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor<S> out = tape->make_node(a.shape(), detail::any_requires_grad<S>({a, b}));
    out.value() = a.value() + b.value();
    check_finite(out, "add");
    if (out.requires_grad())
        tape->record([an = a.node(), bn = b.node(), on = out.node()] {
            if (an->requires_grad) an->grad += on->grad;
            if (bn->requires_grad) bn->grad += on->grad;
        });
    return out;
}

/// Broadcast-adds a length-c vector to every row of an [r x c] tensor.
template <class S>
Tensor<S> add_rowvec(const Tensor<S>& x, const Tensor<S>& v) {
    Tape<S>* tape = detail::same_tape<S>({x, v});
    if (x.rank() != 2 || v.rank() != 1 || v.dim(0) != x.dim(1))
        throw ShapeError("add_rowvec: got " + shape_str(x.shape()) + " and " + shape_str(v.shape()));
    Tensor<S> out = tape->make_node(x.shape(), detail::any_requires_grad<S>({x, v}));
    out.matrix() = x.matrix().rowwise() + v.value().transpose();
    check_finite(out, "add_rowvec");
    if (out.requires_grad())
        tape->record([xn = x.node(), vn = v.node(), on = out.node(), r = x.dim(0), c = x.dim(1)] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), r, c);
            if (xn->requires_grad) xn->grad += on->grad;
            if (vn->requires_grad) vn->grad += go.colwise().sum().transpose();
        });
    return out;
}

template <class S>
Tensor<S> scale(const Tensor<S>& x, S factor) {
    Tape<S>* tape = detail::same_tape<S>({x});
    Tensor<S> out = tape->make_node(x.shape(), x.requires_grad());
    out.value() = factor * x.value();
    check_finite(out, "scale");
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node(), factor] { xn->grad += factor * on->grad; });
    return out;
}

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    Tape<S>* tape = detail::same_tape<S>({a, b});
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner dimensions of " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " do not match");
    Tensor<S> out = tape->make_node({a.dim(0), b.dim(1)}, detail::any_requires_grad<S>({a, b}));
    out.matrix() = a.matrix() * b.matrix();
    check_finite(out, "matmul");
    if (out.requires_grad())
        tape->record([an = a.node(), bn = b.node(), on = out.node(), r = a.dim(0), k = a.dim(1), c = b.dim(1)] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), r, c);
            Eigen::Map<const Matrix<S>> av(an->value.data(), r, k);
            Eigen::Map<const Matrix<S>> bv(bn->value.data(), k, c);
            if (an->requires_grad) Eigen::Map<Matrix<S>>(an->grad.data(), r, k) += go * bv.transpose();
            if (bn->requires_grad) Eigen::Map<Matrix<S>>(bn->grad.data(), k, c) += av.transpose() * go;
        });
    return out;
}

template <class S>
Tensor<S> transpose(const Tensor<S>& x) {
    Tape<S>* tape = detail::same_tape<S>({x});
    if (x.rank() != 2) throw ShapeError("transpose: expected rank-2 tensor, got " + shape_str(x.shape()));
    Tensor<S> out = tape->make_node({x.dim(1), x.dim(0)}, x.requires_grad());
    out.matrix() = x.matrix().transpose();
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node(), r = x.dim(0), c = x.dim(1)] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), c, r);
            Eigen::Map<Matrix<S>>(xn->grad.data(), r, c) += go.transpose();
        });
    return out;
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
    Tape<S>* tape = parts.front().tape();
    const int rows = parts.front().dim(0);
    int total = 0;
    bool rg = false;
    for (const Tensor<S>& p : parts) {
        detail::same_tape<S>({parts.front(), p});
        if (p.rank() != 2 || p.dim(0) != rows)
            throw ShapeError("concat_cols: row mismatch at " + shape_str(p.shape()));
        total += p.dim(1);
        rg = rg || p.requires_grad();
    }
    Tensor<S> out = tape->make_node({rows, total}, rg);
    auto om = out.matrix();
    int off = 0;
    for (const Tensor<S>& p : parts) {
        om.middleCols(off, p.dim(1)) = p.matrix();
        off += p.dim(1);
    }
    if (rg) {
        std::vector<TapeNode<S>*> nodes;
        nodes.reserve(parts.size());
        for (const Tensor<S>& p : parts) nodes.push_back(p.node());
        tape->record([nodes = std::move(nodes), on = out.node(), rows, total] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), rows, total);
            int off = 0;
            for (TapeNode<S>* n : nodes) {
                const int c = n->shape[1];
                if (n->requires_grad)
                    Eigen::Map<Matrix<S>>(n->grad.data(), rows, c) += go.middleCols(off, c);
                off += c;
            }
        });
    }
    return out;
}

template <class S>
Tensor<S> sum(const Tensor<S>& x) {
    Tape<S>* tape = detail::same_tape<S>({x});
    Tensor<S> out = tape->make_node(Shape{}, x.requires_grad());
    out.value()[0] = x.value().sum();
    check_finite(out, "sum");
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node()] { xn->grad.array() += on->grad[0]; });
    return out;
}

/// Mean squared error over all elements; returns a scalar.
template <class S>
Tensor<S> mse(const Tensor<S>& pred, const Tensor<S>& target) {
    Tape<S>* tape = detail::same_tape<S>({pred, target});
    if (pred.shape() != target.shape())
        throw ShapeError("mse: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
    const S inv_n = S(1) / static_cast<S>(pred.numel());
    Tensor<S> out = tape->make_node(Shape{}, detail::any_requires_grad<S>({pred, target}));
    out.value()[0] = (pred.value() - target.value()).squaredNorm() * inv_n;
    check_finite(out, "mse");
    if (out.requires_grad())
        tape->record([pn = pred.node(), tn = target.node(), on = out.node(), inv_n] {
            const S g = S(2) * inv_n * on->grad[0];
            if (pn->requires_grad) pn->grad += g * (pn->value - tn->value);
            if (tn->requires_grad) tn->grad -= g * (pn->value - tn->value);
        });
    return out;
}

template <class S>
Tensor<S> leaky_relu(const Tensor<S>& x, S leak) {
    Tape<S>* tape = detail::same_tape<S>({x});
    Tensor<S> out = tape->make_node(x.shape(), x.requires_grad());
    out.value() = x.value().cwiseMax(S(0)) + leak * x.value().cwiseMin(S(0));
    check_finite(out, "leaky_relu");
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node(), leak] {
            xn->grad.array() +=
                (xn->value.array() > S(0)).select(on->grad.array(), leak * on->grad.array());
        });
    return out;
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& x) {
    Tape<S>* tape = detail::same_tape<S>({x});
    Tensor<S> out = tape->make_node(x.shape(), x.requires_grad());
    out.value() = x.value().unaryExpr([](S v) {
        if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
        const S e = std::exp(v);
        return e / (S(1) + e);
    });
    check_finite(out, "sigmoid");
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node()] {
            xn->grad.array() += on->grad.array() * on->value.array() * (S(1) - on->value.array());
        });
    return out;
}

/// Row-wise softmax with max subtraction.
template <class S>
Tensor<S> softmax_rows(const Tensor<S>& x) {
    Tape<S>* tape = detail::same_tape<S>({x});
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected rank-2 tensor, got " + shape_str(x.shape()));
    Tensor<S> out = tape->make_node(x.shape(), x.requires_grad());
    auto xm = x.matrix();
    auto om = out.matrix();
    for (int r = 0; r < x.dim(0); ++r) {
        const S rowmax = xm.row(r).maxCoeff();
        om.row(r) = (xm.row(r).array() - rowmax).exp();
        om.row(r) /= om.row(r).sum();
    }
    check_finite(out, "softmax_rows");
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node(), r = x.dim(0), c = x.dim(1)] {
            Eigen::Map<const Matrix<S>> ov(on->value.data(), r, c);
            Eigen::Map<const Matrix<S>> go(on->grad.data(), r, c);
            Eigen::Map<Matrix<S>> gx(xn->grad.data(), r, c);
            for (int i = 0; i < r; ++i) {
                const S dot = go.row(i).dot(ov.row(i));
                gx.row(i).array() += ov.row(i).array() * (go.row(i).array() - dot);
            }
        });
    return out;
}

/// Normalizes over the last axis of an [r x c] tensor.
template <class S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias_term, S eps) {
    Tape<S>* tape = detail::same_tape<S>({x, gain, bias_term});
    if (x.rank() != 2 || gain.rank() != 1 || bias_term.rank() != 1 || gain.dim(0) != x.dim(1) ||
        bias_term.dim(0) != x.dim(1))
        throw ShapeError("layer_norm: got " + shape_str(x.shape()) + ", gain " + shape_str(gain.shape()) +
                         ", bias " + shape_str(bias_term.shape()));
    const int r = x.dim(0), c = x.dim(1);
    Matrix<S> xhat(r, c);
    Vector<S> inv_std(r);
    auto xm = x.matrix();
    for (int i = 0; i < r; ++i) {
        const S mu = xm.row(i).mean();
        const S var = (xm.row(i).array() - mu).square().mean();
        inv_std[i] = S(1) / std::sqrt(var + eps);
        xhat.row(i) = (xm.row(i).array() - mu) * inv_std[i];
    }
    Tensor<S> out = tape->make_node(x.shape(), detail::any_requires_grad<S>({x, gain, bias_term}));
    out.matrix() = (xhat.array().rowwise() * gain.value().transpose().array()).rowwise() +
                   bias_term.value().transpose().array();
    check_finite(out, "layer_norm");
    if (out.requires_grad())
        tape->record([xn = x.node(), gn = gain.node(), bn = bias_term.node(), on = out.node(),
                      xhat = std::move(xhat), inv_std = std::move(inv_std), r, c] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), r, c);
            if (gn->requires_grad)
                gn->grad += (go.array() * xhat.array()).colwise().sum().matrix().transpose();
            if (bn->requires_grad) bn->grad += go.colwise().sum().transpose();
            if (xn->requires_grad) {
                Eigen::Map<Matrix<S>> gx(xn->grad.data(), r, c);
                for (int i = 0; i < r; ++i) {
                    Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
                        go.row(i).array() * gn->value.transpose().array();
                    const S m1 = dxhat.mean();
                    const S m2 = (dxhat * xhat.row(i).array()).mean();
                    gx.row(i).array() += inv_std[i] * (dxhat - m1 - xhat.row(i).array() * m2);
                }
            }
        });
    return out;
}

/// Inverted dropout: surviving entries are scaled by 1/(1-p) at train time so
/// inference is the identity.
template <class S>
Tensor<S> dropout(const Tensor<S>& x, double p, bool training, Rng& rng) {
    Tape<S>* tape = detail::same_tape<S>({x});
    if (!(p >= 0.0) || p >= 1.0) throw InvalidArgument("dropout: p must lie in [0,1), got " + std::to_string(p));
    Tensor<S> out = tape->make_node(x.shape(), x.requires_grad());
    if (!training || p == 0.0) {
        out.value() = x.value();
        if (out.requires_grad())
            tape->record([xn = x.node(), on = out.node()] { xn->grad += on->grad; });
        return out;
    }
    const S keep_scale = S(1.0 / (1.0 - p));
    Vector<S> mask(x.numel());
    for (std::int64_t i = 0; i < mask.size(); ++i) mask[i] = rng.u01() >= p ? keep_scale : S(0);
    out.value() = x.value().cwiseProduct(mask);
    if (out.requires_grad())
        tape->record([xn = x.node(), on = out.node(), mask = std::move(mask)] {
            xn->grad += on->grad.cwiseProduct(mask);
        });
    return out;
}

/// 1-D convolution over the time axis with zero left-padding.
/// input [C_in x L], kernel [C_out x C_in x k], bias [C_out];
/// out[c,t] = bias[c] + sum_{i,j} kernel[c,i,j] * padded_input[i, t + j*dilation],
/// L_out = L + left_pad - dilation*(k-1).
template <class S>
Tensor<S> conv1d(const Tensor<S>& input, const Tensor<S>& kernel, const Tensor<S>& bias, int dilation,
                 int left_pad) {
    Tape<S>* tape = detail::same_tape<S>({input, kernel, bias});
    if (input.rank() != 2) throw ShapeError("conv1d: input must be [C_in x L], got " + shape_str(input.shape()));
    if (kernel.rank() != 3)
        throw ShapeError("conv1d: kernel must be [C_out x C_in x k], got " + shape_str(kernel.shape()));
    const int ci = input.dim(0), len = input.dim(1);
    const int co = kernel.dim(0), k = kernel.dim(2);
    if (kernel.dim(1) != ci)
        throw InvalidArgument("conv1d: kernel expects " + std::to_string(kernel.dim(1)) +
                              " input channels, input has " + std::to_string(ci));
    if (bias.rank() != 1 || bias.dim(0) != co)
        throw ShapeError("conv1d: bias must be [C_out], got " + shape_str(bias.shape()));
    if (dilation < 1) throw InvalidArgument("conv1d: dilation must be positive");
    if (left_pad < 0) throw InvalidArgument("conv1d: left_pad must be non-negative");
    const int lout = len + left_pad - dilation * (k - 1);
    if (lout < 1)
        throw InvalidArgument("conv1d: output length " + std::to_string(lout) + " for L=" + std::to_string(len) +
                              ", pad=" + std::to_string(left_pad) + ", dilation=" + std::to_string(dilation) +
                              ", k=" + std::to_string(k));

    Matrix<S> padded = Matrix<S>::Zero(ci, len + left_pad);
    padded.rightCols(len) = input.matrix();

    Tensor<S> out = tape->make_node({co, lout}, detail::any_requires_grad<S>({input, kernel, bias}));
    auto om = out.matrix();
    for (int c = 0; c < co; ++c) {
        om.row(c).setConstant(bias.value()[c]);
        for (int i = 0; i < ci; ++i)
            for (int j = 0; j < k; ++j)
                om.row(c) += kernel.value()[(c * ci + i) * k + j] * padded.row(i).segment(j * dilation, lout);
    }
    check_finite(out, "conv1d");
    if (out.requires_grad())
        tape->record([in = input.node(), kn = kernel.node(), bn = bias.node(), on = out.node(),
                      padded = std::move(padded), dilation, left_pad, ci, co, k, len, lout] {
            Eigen::Map<const Matrix<S>> go(on->grad.data(), co, lout);
            if (bn->requires_grad)
                for (int c = 0; c < co; ++c) bn->grad[c] += go.row(c).sum();
            if (kn->requires_grad)
                for (int c = 0; c < co; ++c)
                    for (int i = 0; i < ci; ++i)
                        for (int j = 0; j < k; ++j)
                            kn->grad[(c * ci + i) * k + j] +=
                                go.row(c).dot(padded.row(i).segment(j * dilation, lout));
            if (in->requires_grad) {
                Matrix<S> gpad = Matrix<S>::Zero(ci, len + left_pad);
                for (int c = 0; c < co; ++c)
                    for (int i = 0; i < ci; ++i)
                        for (int j = 0; j < k; ++j)
                            gpad.row(i).segment(j * dilation, lout) +=
                                kn->value[(c * ci + i) * k + j] * go.row(c);
                Eigen::Map<Matrix<S>>(in->grad.data(), ci, len) += gpad.rightCols(len);
            }
        });
    return out;
}

/// Weight normalization w = g * v / ||v||, with the norm taken per output
/// channel (axis 0; a rank-1 v is a single channel).
template <class S>
Tensor<S> weight_norm(const Tensor<S>& v, const Tensor<S>& g) {
    Tape<S>* tape = detail::same_tape<S>({v, g});
    const int channels = v.rank() <= 1 ? 1 : v.dim(0);
    if (g.rank() != 1 || g.dim(0) != channels)
        throw ShapeError("weight_norm: g must have one entry per output channel, got " + shape_str(g.shape()) +
                         " for " + std::to_string(channels) + " channels");
    const std::int64_t block = v.numel() / channels;
    Vector<S> norms(channels);
    for (int c = 0; c < channels; ++c) {
        norms[c] = v.value().segment(c * block, block).norm();
        if (!(norms[c] > S(0)))
            throw NumericError("weight_norm: zero-norm weight vector in channel " + std::to_string(c));
    }
    Tensor<S> out = tape->make_node(v.shape(), detail::any_requires_grad<S>({v, g}));
    for (int c = 0; c < channels; ++c)
        out.value().segment(c * block, block) = (g.value()[c] / norms[c]) * v.value().segment(c * block, block);
    check_finite(out, "weight_norm");
    if (out.requires_grad())
        tape->record([vn = v.node(), gn = g.node(), on = out.node(), norms = std::move(norms), channels, block] {
            for (int c = 0; c < channels; ++c) {
                auto vv = vn->value.segment(c * block, block);
                auto go = on->grad.segment(c * block, block);
                const S n = norms[c];
                const S dot = go.dot(vv);
                if (gn->requires_grad) gn->grad[c] += dot / n;
                if (vn->requires_grad)
                    vn->grad.segment(c * block, block) +=
                        (gn->value[c] / n) * go - (gn->value[c] * dot / (n * n * n)) * vv;
            }
        });
    return out;
}

}  // namespace dtaad
