#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "skelrob/error.hpp"

namespace skelrob::num {

std::string shape_str(const std::vector<int>& shape);

// Dense row-major tensor of 64-bit reals.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(checked_numel(shape)), 0.0);
    }

    Tensor(std::vector<int> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (checked_numel(shape) != static_cast<int64_t>(data.size()))
            usage_error("tensor: shape " + shape_str(shape) + " does not match " +
                        std::to_string(data.size()) + " elements");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor full(std::vector<int> s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(data.size()); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // offset helpers for the common rank-4 [N,C,T,J] layout
    int64_t idx4(int a, int b, int c, int d) const {
        return ((static_cast<int64_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d;
    }
    double& at4(int a, int b, int c, int d) { return data[static_cast<size_t>(idx4(a, b, c, d))]; }
    double at4(int a, int b, int c, int d) const { return data[static_cast<size_t>(idx4(a, b, c, d))]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Zero-sized dimensions are allowed at the container level (an empty
    // sample batch is a valid value); graph ops reject them at build time.
    static int64_t checked_numel(const std::vector<int>& shape) {
        if (shape.empty()) usage_error("tensor: empty shape");
        int64_t n = 1;
        for (int d : shape) {
            if (d < 0) usage_error("tensor: negative dimension in " + shape_str(shape));
            n *= d;
        }
        return n;
    }
};

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

inline int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

} // namespace skelrob::num
