#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dtaad/errors.hpp"

// Forward values are checked for NaN/Inf after every op unless NDEBUG is set.
#if !defined(DTAAD_CHECK_FINITE) && !defined(NDEBUG)
#define DTAAD_CHECK_FINITE 1
#endif

namespace dtaad {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using VectorF = Vector<float>;
using VectorD = Vector<double>;

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

template <class S>
class Tape;

template <class S>
struct TapeNode {
    Shape shape;
    Vector<S> value;
    Vector<S> grad;  // size 0 until allocated
    bool requires_grad = false;
    Tape<S>* tape = nullptr;
};

/// Lightweight handle to a node owned by a Tape. Copying the handle aliases
/// the node; the Tape must outlive all handles into it.
template <class S>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(TapeNode<S>* node) : node_(node) {}

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::int64_t numel() const { return node_->value.size(); }

    Vector<S>& value() { return node_->value; }
    const Vector<S>& value() const { return node_->value; }
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    Vector<S>& grad() {
        if (!has_grad()) throw StateError("tensor has no gradient buffer");
        return node_->grad;
    }
    const Vector<S>& grad() const {
        if (!has_grad()) throw StateError("tensor has no gradient buffer");
        return node_->grad;
    }
    bool requires_grad() const { return node_->requires_grad; }

    S scalar() const {
        if (numel() != 1) throw InvalidArgument("scalar() on tensor of shape " + shape_str(shape()));
        return node_->value[0];
    }

    /// Row-major 2-D view (rank must be 2).
    Eigen::Map<Matrix<S>> matrix() {
        require_rank(2);
        return {node_->value.data(), dim(0), dim(1)};
    }
    Eigen::Map<const Matrix<S>> matrix() const {
        require_rank(2);
        return {node_->value.data(), dim(0), dim(1)};
    }
    Eigen::Map<Matrix<S>> grad_matrix() {
        require_rank(2);
        return {grad().data(), dim(0), dim(1)};
    }

    TapeNode<S>* node() const { return node_; }
    Tape<S>* tape() const { return node_ ? node_->tape : nullptr; }

private:
    void require_rank(int r) const {
        if (rank() != r)
            throw ShapeError("expected rank-" + std::to_string(r) + " tensor, got " + shape_str(shape()));
    }

    TapeNode<S>* node_ = nullptr;
};

/// Records every op executed through it; backward() replays the records once
/// in reverse execution order and then marks the tape consumed. A tape and
/// its tensors form a single-owner unit (not shareable across threads).
template <class S>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor<S> leaf(Shape shape, bool requires_grad = false) {
        Tensor<S> t = make_node(std::move(shape), requires_grad);
        t.value().setZero();
        return t;
    }

    Tensor<S> leaf(Shape shape, const Vector<S>& data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size())
            throw ShapeError("leaf data size " + std::to_string(data.size()) + " does not match shape " +
                             shape_str(shape));
        Tensor<S> t = make_node(std::move(shape), requires_grad);
        t.value() = data;
        return t;
    }

    Tensor<S> constant(Shape shape, const Vector<S>& data) { return leaf(std::move(shape), data, false); }

    Tensor<S> constant_scalar(S v) {
        Tensor<S> t = make_node(Shape{}, false);
        t.value()[0] = v;
        return t;
    }

    Tensor<S> constant_matrix(const Matrix<S>& m) {
        Tensor<S> t = make_node({static_cast<int>(m.rows()), static_cast<int>(m.cols())}, false);
        Eigen::Map<Matrix<S>>(t.value().data(), m.rows(), m.cols()) = m;
        return t;
    }

    /// Allocates an op output. Grad buffers exist exactly when requires_grad.
    Tensor<S> make_node(Shape shape, bool requires_grad) {
        nodes_.emplace_back();
        TapeNode<S>& n = nodes_.back();
        n.shape = std::move(shape);
        n.value.resize(shape_numel(n.shape));
        n.requires_grad = requires_grad;
        if (requires_grad) n.grad = Vector<S>::Zero(n.value.size());
        n.tape = this;
        return Tensor<S>(&n);
    }

    void record(std::function<void()> backward_op) { ops_.push_back(std::move(backward_op)); }

    std::size_t op_count() const { return ops_.size(); }
    bool consumed() const { return consumed_; }

    /// Reverse-mode sweep from a scalar loss. Single use per tape.
    void backward(const Tensor<S>& loss) {
        if (consumed_) throw StateError("backward called on a consumed tape");
        if (!loss.valid() || loss.tape() != this)
            throw InvalidArgument("loss tensor does not belong to this tape");
        if (loss.numel() != 1)
            throw InvalidArgument("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
        consumed_ = true;
        TapeNode<S>* ln = loss.node();
        if (ln->grad.size() != ln->value.size()) ln->grad = Vector<S>::Zero(ln->value.size());
        ln->grad[0] = S(1);
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    std::deque<TapeNode<S>> nodes_;
    std::vector<std::function<void()>> ops_;
    bool consumed_ = false;
};

template <class S>
void backward(const Tensor<S>& loss) {
    if (!loss.valid() || loss.tape() == nullptr) throw InvalidArgument("backward on a detached tensor");
    loss.tape()->backward(loss);
}

template <class S>
inline void check_finite(const Tensor<S>& t, const char* op) {
#if DTAAD_CHECK_FINITE
    if (!t.value().allFinite()) throw NumericError(std::string(op) + " produced a non-finite value");
#else
    (void)t;
    (void)op;
#endif
}

}  // namespace dtaad
