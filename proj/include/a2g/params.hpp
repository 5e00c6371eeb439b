#pragma once

#include <string>
#include <vector>

#include "a2g/tape.hpp"
#include "a2g/tensor.hpp"

namespace a2g {

enum class ParamKind { Base, Bias, Embed, AdapterDown, AdapterUp };

// Offline stages train the base network and leave adapters at their neutral
// init; online improvement freezes everything except the adapter factors.
enum class TrainMode { FullOffline, AdapterOnly };

bool is_trainable(ParamKind kind, TrainMode mode);
const char* param_kind_name(ParamKind kind);
ParamKind param_kind_from_name(const std::string& name);

struct Param {
    std::string name;
    Tensor value;
    ParamKind kind = ParamKind::Base;
};

// Ordered, name-addressable parameter container shared by both networks.
// Order is fixed by construction, which pins optimizer-state alignment and
// checkpoint layout.
class ParamStore {
public:
    int add(std::string name, Tensor value, ParamKind kind);
    int find(const std::string& name) const;  // -1 if absent
    Param& at(int idx) { return params_[static_cast<size_t>(idx)]; }
    const Param& at(int idx) const { return params_[static_cast<size_t>(idx)]; }
    int count() const { return static_cast<int>(params_.size()); }

    std::vector<int> indices_of(TrainMode mode) const;  // trainable under mode
    uint64_t checksum_of_kind(ParamKind kind) const;
    uint64_t checksum_all() const;

private:
    std::vector<Param> params_;
};

// Per-tape binding of store parameters to leaf nodes. Leaves are created
// lazily; requires_grad follows the training mode (or is globally off for
// inference tapes).
class GraphBinding {
public:
    GraphBinding(Tape& tape, const ParamStore& store, TrainMode mode, bool with_grad)
        : tape_(tape), store_(store), mode_(mode), with_grad_(with_grad),
          leaves_(static_cast<size_t>(store.count()), Var{}) {}

    Tape& tape() { return tape_; }
    const ParamStore& store() const { return store_; }

    Var var(int param_idx);
    Var constant(Tensor value) { return tape_.leaf(std::move(value), false); }

    // Binds an existing leaf as a parameter's node (values read from the
    // leaf, not the store); used by gradient checkers that own the leaves.
    void adopt(int param_idx, Var leaf) { leaves_[static_cast<size_t>(param_idx)] = leaf; }

    // Gradients for every parameter index, aligned with the store; untouched
    // parameters read as zeros. Call after tape().backward(loss).
    Tensor grad_of(int param_idx) const;

private:
    Tape& tape_;
    const ParamStore& store_;
    TrainMode mode_;
    bool with_grad_;
    std::vector<Var> leaves_;
};

}  // namespace a2g
