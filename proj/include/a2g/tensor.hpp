#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a2g/rng.hpp"

namespace a2g {

// Dense row-major tensor of 64-bit floats. Rank is 1 or 2 throughout the
// model code; the shape vector is kept generic for serialization.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor vec(std::vector<double> values);                    // rank-1 [n]
    static Tensor matrix(int rows, int cols, std::vector<double> values);
    static Tensor identity(int n);
    static Tensor randn(std::vector<int> shape, Rng& rng);
    static Tensor rand_uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

    int64_t numel() const;
    // rank-2 accessors; rank-1 tensors behave as a single row
    int rows() const;
    int cols() const;
    double& at(int r, int c);
    double at(int r, int c) const;
    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
    bool all_finite() const;

    Tensor reshaped(std::vector<int> new_shape) const;
    Tensor as_row() const;  // rank-1 [n] -> rank-2 [1 x n]; rank-2 unchanged
};

// max |a - b| over all entries; shapes must match
double max_abs_diff(const Tensor& a, const Tensor& b);
// Frobenius norm
double norm(const Tensor& t);
// FNV-1a over the raw bytes of shape + data; used for freeze-contract checks
uint64_t tensor_checksum(const Tensor& t);

[[noreturn]] void throw_shape_error(const std::string& op, const Tensor& a, const Tensor& b);
[[noreturn]] void throw_shape_error(const std::string& op, const Tensor& a);

}  // namespace a2g
