#pragma once

#include <cstdint>
#include <string>

#include "dtaad/tensor.hpp"

namespace dtaad {

/// Plain value-semantics parameter array. Parameter structs hold these between
/// steps; each forward pass binds them onto a fresh tape as leaves.
template <class S>
struct ParamArray {
    Shape shape;
    Vector<S> values;

    ParamArray() = default;
    explicit ParamArray(Shape s) : shape(std::move(s)), values(Vector<S>::Zero(shape_numel(shape))) {}

    std::int64_t size() const { return values.size(); }
};

template <class S>
ParamArray<S> param_like(const ParamArray<S>& p) {
    return ParamArray<S>(p.shape);
}

template <class From, class To>
ParamArray<To> param_cast(const ParamArray<From>& p) {
    ParamArray<To> out(p.shape);
    out.values = p.values.template cast<To>();
    return out;
}

}  // namespace dtaad
