#pragma once

#include <functional>
#include <vector>

#include "a2g/tensor.hpp"

namespace a2g {

// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Linear record of executed ops with saved activations. backward() walks the
// record once in reverse creation order (creation order is already
// topological). One tape per training step / inference call; tapes are not
// shared across threads.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false);

    const Tensor& val(Var v) const;
    bool requires_grad(Var v) const;

    // --- ops -------------------------------------------------------------
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var add_rowvec(Var a, Var v);  // a [m x n] + broadcast row v [n] / [1 x n]
    Var tanh_act(Var a);
    Var gelu_act(Var a);
    Var layer_norm(Var a, double eps);  // per-row normalization
    Var softmax_lastdim(Var a);
    Var slice_rows(Var a, int start, int count);
    Var slice_cols(Var a, int start, int count);
    Var concat_rows(const std::vector<Var>& parts);  // rank-1 parts become rows
    Var concat_cols(const std::vector<Var>& parts);
    Var sum_all(Var a);   // -> [1]
    Var mean_all(Var a);  // -> [1]
    Var square(Var a) { return mul(a, a); }
    // softmax(q k^T / sqrt(d)) v
    Var attention(Var q, Var k, Var v);
    // mean((a - b)^2); the flow-matching building block
    Var mse(Var a, Var b) { return mean_all(square(sub(a, b))); }

    // Reverse pass from a scalar loss node. Gradients of every node reachable
    // from the loss are accumulated; anything unreached reads as zeros.
    void backward(Var loss);

    // Gradient of v after backward(); zeros if v was not reached.
    Tensor grad(Var v) const;

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<int> parents;
        // accumulates self's grad into parents' grads
        std::function<void(Tape&, int self)> backprop;
        bool requires_grad = false;
    };

    Var record(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> fn,
               const char* op_name);
    Tensor& grad_buf(int id);
    const Tensor& value_of(int id) const { return nodes_[static_cast<size_t>(id)].value; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool backward_done_ = false;
};

}  // namespace a2g
