#pragma once

// Central finite-difference gradient oracle. All checks run on float64 shadow
// copies with step 1e-3; relative error uses a scale floor so exact zeros on
// both sides compare clean.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "dtaad/tensor.hpp"

namespace dtaad::testing {

inline double rel_err(double analytic, double reference, double floor_scale = 1e-3) {
    const double scale = std::max({std::abs(analytic), std::abs(reference), floor_scale});
    return std::abs(analytic - reference) / scale;
}

inline double max_rel_err(const VectorD& analytic, const VectorD& reference, double floor_scale = 1e-3) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, rel_err(analytic[i], reference[i], floor_scale));
    return worst;
}

/// Central finite differences of a scalar function over a flat vector.
template <class F>
VectorD finite_diff_grad(const VectorD& x0, F&& f, double h = 1e-3) {
    VectorD grad(x0.size());
    VectorD x = x0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        x[i] = x0[i] + h;
        const double up = f(x);
        x[i] = x0[i] - h;
        const double down = f(x);
        x[i] = x0[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Gradient check for a tape op. The builder receives leaf tensors matching
/// `inputs` and must return a scalar tensor; returns the worst elementwise
/// relative error between backward gradients and central finite differences.
template <class Builder>
double op_grad_max_rel_err(const std::vector<std::pair<Shape, VectorD>>& inputs, Builder&& build,
                           double h = 1e-3, double floor_scale = 1e-3) {
    Tape<double> tape;
    std::vector<Tensor<double>> leaves;
    leaves.reserve(inputs.size());
    for (const auto& [shape, data] : inputs) leaves.push_back(tape.leaf(shape, data, true));
    Tensor<double> loss = build(tape, leaves);
    tape.backward(loss);

    double worst = 0.0;
    for (std::size_t which = 0; which < inputs.size(); ++which) {
        const VectorD analytic = leaves[which].grad();
        auto scalar_of = [&](const VectorD& x) {
            Tape<double> fresh;
            std::vector<Tensor<double>> ts;
            ts.reserve(inputs.size());
            for (std::size_t i = 0; i < inputs.size(); ++i)
                ts.push_back(fresh.leaf(inputs[i].first, i == which ? x : inputs[i].second, false));
            return build(fresh, ts).scalar();
        };
        const VectorD fd = finite_diff_grad(inputs[which].second, scalar_of, h);
        worst = std::max(worst, max_rel_err(analytic, fd, floor_scale));
    }
    return worst;
}

inline VectorD random_vector(std::int64_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    VectorD v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

/// Random values bounded away from zero (avoids finite differences straddling
/// activation kinks).
inline VectorD random_vector_away_from_zero(std::int64_t n, Rng& rng, double margin = 0.05) {
    VectorD v(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const double mag = margin + (1.0 - margin) * rng.u01();
        v[i] = rng.u01() < 0.5 ? -mag : mag;
    }
    return v;
}

}  // namespace dtaad::testing
