#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"

namespace sdc {

// Dense row-major n-d array. float is the operational precision; the double
// instantiation exists for gradient checking.
template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> shp, S fill = S(0)) : shape(std::move(shp)) {
        data.assign(count(shape), fill);
    }

    TensorT(std::vector<int> shp, std::vector<S> values) : shape(std::move(shp)), data(std::move(values)) {
        if (data.size() != count(shape))
            throw_dimension("tensor data length " + std::to_string(data.size()) +
                            " does not match shape product " + std::to_string(count(shape)));
    }

    static std::size_t count(const std::vector<int>& shp) {
        std::size_t n = 1;
        for (int d : shp) {
            if (d <= 0) throw_dimension("tensor dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }

    S& at(std::size_t i) { return data[i]; }
    S at(std::size_t i) const { return data[i]; }

    std::size_t flat(std::initializer_list<int> idx) const {
        if (idx.size() != shape.size()) throw_dimension("index rank does not match tensor rank");
        std::size_t off = 0;
        const int* d = idx.begin();
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (d[i] < 0 || d[i] >= shape[i]) throw_dimension("index out of range");
            off = off * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(d[i]);
        }
        return off;
    }
    S& at(std::initializer_list<int> idx) { return data[flat(idx)]; }
    S at(std::initializer_list<int> idx) const { return data[flat(idx)]; }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    TensorT reshaped(std::vector<int> new_shape) const {
        if (count(new_shape) != data.size()) throw_dimension("reshape changes element count");
        TensorT out;
        out.shape = std::move(new_shape);
        out.data = data;
        return out;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <class To, class From>
TensorT<To> tensor_cast(const TensorT<From>& t) {
    TensorT<To> out;
    out.shape = t.shape;
    out.data.resize(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<To>(t.data[i]);
    return out;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace sdc
