#include "a2g/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace a2g {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) {
            throw std::invalid_argument("tensor: non-positive extent in shape");
        }
        n *= e;
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    const int64_t n = shape_numel(shape);
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(n), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data) {
        x = value;
    }
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
    if (static_cast<int64_t>(values.size()) != static_cast<int64_t>(rows) * cols) {
        throw std::invalid_argument("tensor: matrix() value count does not match rows*cols");
    }
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t = zeros({n, n});
    for (int i = 0; i < n; ++i) {
        t.at(i, i) = 1.0;
    }
    return t;
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data) {
        x = rng.normal();
    }
    return t;
}

Tensor Tensor::rand_uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data) {
        x = rng.uniform(lo, hi);
    }
    return t;
}

int64_t Tensor::numel() const {
    return static_cast<int64_t>(data.size());
}

int Tensor::rows() const {
    return shape.size() == 2 ? shape[0] : 1;
}

int Tensor::cols() const {
    if (shape.size() == 2) {
        return shape[1];
    }
    if (shape.size() == 1) {
        return shape[0];
    }
    throw std::invalid_argument("tensor: cols() on rank-" + std::to_string(shape.size()) + " tensor");
}

double& Tensor::at(int r, int c) {
    return data[static_cast<size_t>(r) * cols() + c];
}

double Tensor::at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols() + c];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        os << (i ? " x " : "") << shape[i];
    }
    os << "]";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
    if (shape_numel(new_shape) != numel()) {
        throw std::invalid_argument("tensor: reshape to incompatible element count");
    }
    Tensor t;
    t.shape = std::move(new_shape);
    t.data = data;
    return t;
}

Tensor Tensor::as_row() const {
    if (shape.size() == 2) {
        return *this;
    }
    return reshaped({1, static_cast<int>(numel())});
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) {
        throw_shape_error("max_abs_diff", a, b);
    }
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

double norm(const Tensor& t) {
    double s = 0.0;
    for (double x : t.data) {
        s += x * x;
    }
    return std::sqrt(s);
}

uint64_t tensor_checksum(const Tensor& t) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    for (int e : t.shape) {
        feed(&e, sizeof(e));
    }
    if (!t.data.empty()) {
        feed(t.data.data(), t.data.size() * sizeof(double));
    }
    return h;
}

void throw_shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void throw_shape_error(const std::string& op, const Tensor& a) {
    throw std::invalid_argument(op + ": unsupported shape " + a.shape_str());
}

}  // namespace a2g
