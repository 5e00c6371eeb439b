#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive and separate from the library code paths they check.

#include <cmath>
#include <vector>

#include "a2g/tensor.hpp"

namespace oracle {

// plain triple-loop matrix product
inline a2g::Tensor matmul(const a2g::Tensor& a, const a2g::Tensor& b) {
    const int m = a.shape[0];
    const int k = a.shape[1];
    const int n = b.shape[1];
    a2g::Tensor c = a2g::Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk) {
                s += a.at(i, kk) * b.at(kk, j);
            }
            c.at(i, j) = s;
        }
    }
    return c;
}

// scalar-by-scalar softmax(q k^T / sqrt(d)) v
inline a2g::Tensor attention(const a2g::Tensor& q, const a2g::Tensor& k, const a2g::Tensor& v) {
    const int tq = q.shape[0];
    const int tk = k.shape[0];
    const int d = q.shape[1];
    const int dv = v.shape[1];
    a2g::Tensor out = a2g::Tensor::zeros({tq, dv});
    for (int i = 0; i < tq; ++i) {
        std::vector<double> w(static_cast<size_t>(tk));
        double z = 0.0;
        for (int j = 0; j < tk; ++j) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) {
                s += q.at(i, c) * k.at(j, c);
            }
            w[static_cast<size_t>(j)] = std::exp(s / std::sqrt(static_cast<double>(d)));
            z += w[static_cast<size_t>(j)];
        }
        for (int j = 0; j < tk; ++j) {
            for (int c = 0; c < dv; ++c) {
                out.at(i, c) += (w[static_cast<size_t>(j)] / z) * v.at(j, c);
            }
        }
    }
    return out;
}

// dense effective weight for an adapter: base + scale * up @ down
inline a2g::Tensor adapter_dense(const a2g::Tensor& base, const a2g::Tensor& up,
                                 const a2g::Tensor& down, double scale) {
    a2g::Tensor eff = base;
    for (int i = 0; i < base.shape[0]; ++i) {
        for (int j = 0; j < base.shape[1]; ++j) {
            double s = 0.0;
            for (int r = 0; r < up.shape[1]; ++r) {
                s += up.at(i, r) * down.at(r, j);
            }
            eff.at(i, j) += scale * s;
        }
    }
    return eff;
}

// distal indices straight from the spacing formula at a given log base,
// before any de-duplication
inline std::vector<int> raw_distal(int K, int P, int M, double base) {
    std::vector<int> d(static_cast<size_t>(M));
    for (int m = 1; m <= M; ++m) {
        if (m == M) {
            d[static_cast<size_t>(m - 1)] = K;
            continue;
        }
        const double q = (K - P) * (std::log(static_cast<double>(m + 1)) / std::log(base)) /
                         (std::log(static_cast<double>(M + 1)) / std::log(base));
        d[static_cast<size_t>(m - 1)] = P + static_cast<int>(std::floor(q + 1e-9));
    }
    return d;
}

}  // namespace oracle
