#include "a2g/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace a2g {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

void require_rank2_compatible(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw_shape_error(op, a, b);
    }
}

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
    if (!value.all_finite()) {
        throw std::runtime_error("tape: non-finite values in leaf tensor");
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::val(Var v) const {
    return nodes_.at(static_cast<size_t>(v.id)).value;
}

bool Tape::requires_grad(Var v) const {
    return nodes_.at(static_cast<size_t>(v.id)).requires_grad;
}

Var Tape::record(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> fn,
                 const char* op_name) {
    if (!value.all_finite()) {
        throw std::runtime_error(std::string("tape: non-finite result in op '") + op_name + "'");
    }
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    for (int p : n.parents) {
        if (nodes_[static_cast<size_t>(p)].requires_grad) {
            n.requires_grad = true;
            break;
        }
    }
    if (n.requires_grad) {
        n.backprop = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.data.empty()) {
        g = Tensor::zeros(nodes_[static_cast<size_t>(id)].value.shape);
    }
    return g;
}

Tensor Tape::grad(Var v) const {
    if (backward_done_ && !grads_[static_cast<size_t>(v.id)].data.empty()) {
        return grads_[static_cast<size_t>(v.id)];
    }
    return Tensor::zeros(nodes_.at(static_cast<size_t>(v.id)).value.shape);
}

void Tape::backward(Var loss) {
    const Tensor& lv = val(loss);
    if (lv.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got " + lv.shape_str());
    }
    if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
        throw std::invalid_argument("backward: loss is not on this tape");
    }
    grads_.assign(nodes_.size(), Tensor{});
    grad_buf(loss.id).data[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.requires_grad || !n.backprop || grads_[static_cast<size_t>(id)].data.empty()) {
            continue;
        }
        n.backprop(*this, id);
    }
    backward_done_ = true;
}

// --- ops -----------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0]) {
        throw_shape_error("matmul", A, B);
    }
    const int m = A.shape[0];
    const int k = A.shape[1];
    const int n = B.shape[1];
    Tensor C = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        const double* arow = &A.data[static_cast<size_t>(i) * k];
        double* crow = &C.data[static_cast<size_t>(i) * n];
        for (int kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik == 0.0) {
                continue;
            }
            const double* brow = &B.data[static_cast<size_t>(kk) * n];
            for (int j = 0; j < n; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    auto bw = [a, b, m, k, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        const Tensor& A = t.value_of(a.id);
        const Tensor& B = t.value_of(b.id);
        if (t.nodes_[static_cast<size_t>(a.id)].requires_grad) {
            Tensor& ga = t.grad_buf(a.id);
            // dA = g B^T
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double gij = g.data[static_cast<size_t>(i) * n + j];
                    if (gij == 0.0) {
                        continue;
                    }
                    const double* brow = &B.data[0];
                    for (int kk = 0; kk < k; ++kk) {
                        ga.data[static_cast<size_t>(i) * k + kk] += gij * brow[static_cast<size_t>(kk) * n + j];
                    }
                }
            }
        }
        if (t.nodes_[static_cast<size_t>(b.id)].requires_grad) {
            Tensor& gb = t.grad_buf(b.id);
            // dB = A^T g
            for (int i = 0; i < m; ++i) {
                for (int kk = 0; kk < k; ++kk) {
                    const double aik = A.data[static_cast<size_t>(i) * k + kk];
                    if (aik == 0.0) {
                        continue;
                    }
                    for (int j = 0; j < n; ++j) {
                        gb.data[static_cast<size_t>(kk) * n + j] += aik * g.data[static_cast<size_t>(i) * n + j];
                    }
                }
            }
        }
    };
    return record(std::move(C), {a.id, b.id}, bw, "matmul");
}

Var Tape::transpose(Var a) {
    const Tensor& A = val(a);
    if (A.shape.size() != 2) {
        throw_shape_error("transpose", A);
    }
    const int m = A.shape[0];
    const int n = A.shape[1];
    Tensor C = Tensor::zeros({n, m});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            C.at(j, i) = A.at(i, j);
        }
    }
    auto bw = [a, m, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                ga.at(i, j) += g.at(j, i);
            }
        }
    };
    return record(std::move(C), {a.id}, bw, "transpose");
}

Var Tape::add(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require_rank2_compatible("add", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.data.size(); ++i) {
        C.data[i] += B.data[i];
    }
    auto bw = [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        for (int p : {a.id, b.id}) {
            if (t.nodes_[static_cast<size_t>(p)].requires_grad) {
                Tensor& gp = t.grad_buf(p);
                for (size_t i = 0; i < g.data.size(); ++i) {
                    gp.data[i] += g.data[i];
                }
            }
        }
    };
    return record(std::move(C), {a.id, b.id}, bw, "add");
}

Var Tape::sub(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require_rank2_compatible("sub", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.data.size(); ++i) {
        C.data[i] -= B.data[i];
    }
    auto bw = [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        if (t.nodes_[static_cast<size_t>(a.id)].requires_grad) {
            Tensor& ga = t.grad_buf(a.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i];
            }
        }
        if (t.nodes_[static_cast<size_t>(b.id)].requires_grad) {
            Tensor& gb = t.grad_buf(b.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                gb.data[i] -= g.data[i];
            }
        }
    };
    return record(std::move(C), {a.id, b.id}, bw, "sub");
}

Var Tape::mul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require_rank2_compatible("mul", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.data.size(); ++i) {
        C.data[i] *= B.data[i];
    }
    auto bw = [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        const Tensor& A = t.value_of(a.id);
        const Tensor& B = t.value_of(b.id);
        if (t.nodes_[static_cast<size_t>(a.id)].requires_grad) {
            Tensor& ga = t.grad_buf(a.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i] * B.data[i];
            }
        }
        if (t.nodes_[static_cast<size_t>(b.id)].requires_grad) {
            Tensor& gb = t.grad_buf(b.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                gb.data[i] += g.data[i] * A.data[i];
            }
        }
    };
    return record(std::move(C), {a.id, b.id}, bw, "mul");
}

Var Tape::scale(Var a, double c) {
    Tensor C = val(a);
    for (double& x : C.data) {
        x *= c;
    }
    auto bw = [a, c](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] += c * g.data[i];
        }
    };
    return record(std::move(C), {a.id}, bw, "scale");
}

Var Tape::add_rowvec(Var a, Var v) {
    const Tensor& A = val(a);
    const Tensor& V = val(v);
    if (A.shape.size() != 2 || V.numel() != A.shape[1]) {
        throw_shape_error("add_rowvec", A, V);
    }
    const int m = A.shape[0];
    const int n = A.shape[1];
    Tensor C = A;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            C.at(i, j) += V.data[static_cast<size_t>(j)];
        }
    }
    auto bw = [a, v, m, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        if (t.nodes_[static_cast<size_t>(a.id)].requires_grad) {
            Tensor& ga = t.grad_buf(a.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i];
            }
        }
        if (t.nodes_[static_cast<size_t>(v.id)].requires_grad) {
            Tensor& gv = t.grad_buf(v.id);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    gv.data[static_cast<size_t>(j)] += g.at(i, j);
                }
            }
        }
    };
    return record(std::move(C), {a.id, v.id}, bw, "add_rowvec");
}

Var Tape::tanh_act(Var a) {
    Tensor C = val(a);
    for (double& x : C.data) {
        x = std::tanh(x);
    }
    Tensor saved = C;
    auto bw = [a, saved](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] += g.data[i] * (1.0 - saved.data[i] * saved.data[i]);
        }
    };
    return record(std::move(C), {a.id}, bw, "tanh");
}

Var Tape::gelu_act(Var a) {
    // tanh approximation; smooth, so finite-difference checks stay tight
    const Tensor& A = val(a);
    Tensor C = A;
    for (double& x : C.data) {
        const double u = kGeluC * (x + kGeluA * x * x * x);
        x = 0.5 * x * (1.0 + std::tanh(u));
    }
    auto bw = [a](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        const Tensor& A = t.value_of(a.id);
        Tensor& ga = t.grad_buf(a.id);
        for (size_t i = 0; i < g.data.size(); ++i) {
            const double x = A.data[i];
            const double u = kGeluC * (x + kGeluA * x * x * x);
            const double th = std::tanh(u);
            const double sech2 = 1.0 - th * th;
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
            ga.data[i] += g.data[i] * (0.5 * (1.0 + th) + 0.5 * x * sech2 * du);
        }
    };
    return record(std::move(C), {a.id}, bw, "gelu");
}

Var Tape::layer_norm(Var a, double eps) {
    if (eps <= 0.0) {
        throw std::invalid_argument("layer_norm: eps must be > 0");
    }
    const Tensor& A = val(a);
    const Tensor A2 = A.as_row();
    const int m = A2.shape[0];
    const int n = A2.shape[1];
    Tensor C = A;
    Tensor inv_std = Tensor::zeros({m});
    Tensor normed = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) {
            mean += A2.at(i, j);
        }
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = A2.at(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std.data[static_cast<size_t>(i)] = is;
        for (int j = 0; j < n; ++j) {
            const double y = (A2.at(i, j) - mean) * is;
            normed.at(i, j) = y;
            C.data[static_cast<size_t>(i) * n + j] = y;
        }
    }
    auto bw = [a, inv_std, normed, m, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (int i = 0; i < m; ++i) {
            double g_mean = 0.0;
            double gy_mean = 0.0;
            for (int j = 0; j < n; ++j) {
                const double gj = g.data[static_cast<size_t>(i) * n + j];
                g_mean += gj;
                gy_mean += gj * normed.at(i, j);
            }
            g_mean /= n;
            gy_mean /= n;
            const double is = inv_std.data[static_cast<size_t>(i)];
            for (int j = 0; j < n; ++j) {
                const double gj = g.data[static_cast<size_t>(i) * n + j];
                ga.data[static_cast<size_t>(i) * n + j] +=
                    is * (gj - g_mean - normed.at(i, j) * gy_mean);
            }
        }
    };
    return record(std::move(C), {a.id}, bw, "layer_norm");
}

Var Tape::softmax_lastdim(Var a) {
    const Tensor& A = val(a);
    const Tensor A2 = A.as_row();
    const int m = A2.shape[0];
    const int n = A2.shape[1];
    Tensor C = A;
    for (int i = 0; i < m; ++i) {
        double mx = A2.at(i, 0);
        for (int j = 1; j < n; ++j) {
            mx = std::max(mx, A2.at(i, j));
        }
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(A2.at(i, j) - mx);
            C.data[static_cast<size_t>(i) * n + j] = e;
            z += e;
        }
        for (int j = 0; j < n; ++j) {
            C.data[static_cast<size_t>(i) * n + j] /= z;
        }
    }
    Tensor saved = C;
    auto bw = [a, saved, m, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (int i = 0; i < m; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j) {
                dot += g.data[static_cast<size_t>(i) * n + j] * saved.data[static_cast<size_t>(i) * n + j];
            }
            for (int j = 0; j < n; ++j) {
                const double y = saved.data[static_cast<size_t>(i) * n + j];
                ga.data[static_cast<size_t>(i) * n + j] +=
                    y * (g.data[static_cast<size_t>(i) * n + j] - dot);
            }
        }
    };
    return record(std::move(C), {a.id}, bw, "softmax");
}

Var Tape::slice_rows(Var a, int start, int count) {
    const Tensor& A = val(a);
    if (A.shape.size() != 2 || start < 0 || count < 1 || start + count > A.shape[0]) {
        throw std::invalid_argument("slice_rows: range [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) + ") out of bounds for " +
                                    A.shape_str());
    }
    const int n = A.shape[1];
    Tensor C = Tensor::zeros({count, n});
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < n; ++j) {
            C.at(i, j) = A.at(start + i, j);
        }
    }
    auto bw = [a, start, count, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (int i = 0; i < count; ++i) {
            for (int j = 0; j < n; ++j) {
                ga.at(start + i, j) += g.at(i, j);
            }
        }
    };
    return record(std::move(C), {a.id}, bw, "slice_rows");
}

Var Tape::slice_cols(Var a, int start, int count) {
    const Tensor& A = val(a);
    if (A.shape.size() != 2 || start < 0 || count < 1 || start + count > A.shape[1]) {
        throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) + ") out of bounds for " +
                                    A.shape_str());
    }
    const int m = A.shape[0];
    Tensor C = Tensor::zeros({m, count});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < count; ++j) {
            C.at(i, j) = A.at(i, start + j);
        }
    }
    auto bw = [a, start, count, m](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        Tensor& ga = t.grad_buf(a.id);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < count; ++j) {
                ga.at(i, start + j) += g.at(i, j);
            }
        }
    };
    return record(std::move(C), {a.id}, bw, "slice_cols");
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat_rows: empty part list");
    }
    int total_rows = 0;
    int n = -1;
    for (Var p : parts) {
        const Tensor r = val(p).as_row();
        if (n < 0) {
            n = r.shape[1];
        } else if (r.shape[1] != n) {
            throw_shape_error("concat_rows", val(parts[0]), val(p));
        }
        total_rows += r.shape[0];
    }
    Tensor C = Tensor::zeros({total_rows, n});
    int row = 0;
    std::vector<int> offsets;
    std::vector<int> counts;
    std::vector<int> ids;
    for (Var p : parts) {
        const Tensor r = val(p).as_row();
        offsets.push_back(row);
        counts.push_back(r.shape[0]);
        ids.push_back(p.id);
        for (int i = 0; i < r.shape[0]; ++i) {
            for (int j = 0; j < n; ++j) {
                C.at(row + i, j) = r.at(i, j);
            }
        }
        row += r.shape[0];
    }
    auto bw = [ids, offsets, counts, n](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        for (size_t k = 0; k < ids.size(); ++k) {
            if (!t.nodes_[static_cast<size_t>(ids[k])].requires_grad) {
                continue;
            }
            Tensor& gp = t.grad_buf(ids[k]);
            for (int i = 0; i < counts[k]; ++i) {
                for (int j = 0; j < n; ++j) {
                    gp.data[static_cast<size_t>(i) * n + j] += g.at(offsets[k] + i, j);
                }
            }
        }
    };
    std::vector<int> parent_ids = ids;
    return record(std::move(C), std::move(parent_ids), bw, "concat_rows");
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat_cols: empty part list");
    }
    const int m = val(parts[0]).as_row().shape[0];
    int total_cols = 0;
    for (Var p : parts) {
        const Tensor r = val(p).as_row();
        if (r.shape[0] != m) {
            throw_shape_error("concat_cols", val(parts[0]), val(p));
        }
        total_cols += r.shape[1];
    }
    Tensor C = Tensor::zeros({m, total_cols});
    int col = 0;
    std::vector<int> offsets;
    std::vector<int> widths;
    std::vector<int> ids;
    for (Var p : parts) {
        const Tensor r = val(p).as_row();
        offsets.push_back(col);
        widths.push_back(r.shape[1]);
        ids.push_back(p.id);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < r.shape[1]; ++j) {
                C.at(i, col + j) = r.at(i, j);
            }
        }
        col += r.shape[1];
    }
    auto bw = [ids, offsets, widths, m](Tape& t, int self) {
        const Tensor& g = t.grads_[static_cast<size_t>(self)];
        for (size_t k = 0; k < ids.size(); ++k) {
            if (!t.nodes_[static_cast<size_t>(ids[k])].requires_grad) {
                continue;
            }
            Tensor& gp = t.grad_buf(ids[k]);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < widths[k]; ++j) {
                    gp.data[static_cast<size_t>(i) * widths[k] + j] += g.at(i, offsets[k] + j);
                }
            }
        }
    };
    std::vector<int> parent_ids = ids;
    return record(std::move(C), std::move(parent_ids), bw, "concat_cols");
}

Var Tape::sum_all(Var a) {
    const Tensor& A = val(a);
    double s = 0.0;
    for (double x : A.data) {
        s += x;
    }
    auto bw = [a](Tape& t, int self) {
        const double g = t.grads_[static_cast<size_t>(self)].data[0];
        Tensor& ga = t.grad_buf(a.id);
        for (double& x : ga.data) {
            x += g;
        }
    };
    return record(Tensor::vec({s}), {a.id}, bw, "sum_all");
}

Var Tape::mean_all(Var a) {
    const Tensor& A = val(a);
    const double inv = 1.0 / static_cast<double>(A.numel());
    double s = 0.0;
    for (double x : A.data) {
        s += x;
    }
    s *= inv;
    auto bw = [a, inv](Tape& t, int self) {
        const double g = t.grads_[static_cast<size_t>(self)].data[0] * inv;
        Tensor& ga = t.grad_buf(a.id);
        for (double& x : ga.data) {
            x += g;
        }
    };
    return record(Tensor::vec({s}), {a.id}, bw, "mean_all");
}

Var Tape::attention(Var q, Var k, Var v) {
    const Tensor& Q = val(q);
    const Tensor& K = val(k);
    const Tensor& V = val(v);
    if (Q.shape.size() != 2 || K.shape.size() != 2 || V.shape.size() != 2 ||
        Q.shape[1] != K.shape[1] || K.shape[0] != V.shape[0]) {
        throw std::invalid_argument("attention: incompatible shapes q=" + Q.shape_str() +
                                    " k=" + K.shape_str() + " v=" + V.shape_str());
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(Q.shape[1]));
    Var scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
    return matmul(softmax_lastdim(scores), v);
}

}  // namespace a2g
