#include "a2g/params.hpp"

#include <stdexcept>

namespace a2g {

bool is_trainable(ParamKind kind, TrainMode mode) {
    switch (mode) {
        case TrainMode::FullOffline:
            return kind == ParamKind::Base || kind == ParamKind::Bias || kind == ParamKind::Embed;
        case TrainMode::AdapterOnly:
            return kind == ParamKind::AdapterDown || kind == ParamKind::AdapterUp;
    }
    return false;
}

const char* param_kind_name(ParamKind kind) {
    switch (kind) {
        case ParamKind::Base: return "base";
        case ParamKind::Bias: return "bias";
        case ParamKind::Embed: return "embed";
        case ParamKind::AdapterDown: return "adapter_down";
        case ParamKind::AdapterUp: return "adapter_up";
    }
    return "?";
}

ParamKind param_kind_from_name(const std::string& name) {
    if (name == "base") return ParamKind::Base;
    if (name == "bias") return ParamKind::Bias;
    if (name == "embed") return ParamKind::Embed;
    if (name == "adapter_down") return ParamKind::AdapterDown;
    if (name == "adapter_up") return ParamKind::AdapterUp;
    throw std::invalid_argument("unknown param kind '" + name + "'");
}

int ParamStore::add(std::string name, Tensor value, ParamKind kind) {
    if (find(name) >= 0) {
        throw std::invalid_argument("param store: duplicate name '" + name + "'");
    }
    params_.push_back(Param{std::move(name), std::move(value), kind});
    return static_cast<int>(params_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::vector<int> ParamStore::indices_of(TrainMode mode) const {
    std::vector<int> out;
    for (size_t i = 0; i < params_.size(); ++i) {
        if (is_trainable(params_[i].kind, mode)) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

uint64_t ParamStore::checksum_of_kind(ParamKind kind) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const Param& p : params_) {
        if (p.kind == kind) {
            h ^= tensor_checksum(p.value);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

uint64_t ParamStore::checksum_all() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const Param& p : params_) {
        h ^= tensor_checksum(p.value);
        h *= 0x100000001b3ull;
    }
    return h;
}

Var GraphBinding::var(int param_idx) {
    Var& v = leaves_[static_cast<size_t>(param_idx)];
    if (!v.valid()) {
        const Param& p = store_.at(param_idx);
        const bool rg = with_grad_ && is_trainable(p.kind, mode_);
        v = tape_.leaf(p.value, rg);
    }
    return v;
}

Tensor GraphBinding::grad_of(int param_idx) const {
    const Var v = leaves_[static_cast<size_t>(param_idx)];
    if (!v.valid()) {
        return Tensor::zeros(store_.at(param_idx).value.shape);
    }
    return tape_.grad(v);
}

}  // namespace a2g
