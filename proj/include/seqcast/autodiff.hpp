#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqcast/tensor.hpp"

namespace seqcast {

struct Node;
using Value = std::shared_ptr<Node>;

// One recorded step of the forward computation. backprop reads this node's
// grad and accumulates into the parents' grads.
struct Node {
    Tensor val;
    Tensor grad; // allocated on demand, shape == val.shape()
    bool requires_grad = false;
    std::vector<Value> parents;
    std::function<void(Node&)> backprop;

    Tensor& ensure_grad() {
        if (grad.numel() != val.numel()) grad = Tensor(val.shape());
        return grad;
    }
    void zero_grad() {
        if (grad.numel() == val.numel()) grad.fill(0.0);
    }
};

inline Value constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    return n;
}

inline Value leaf(Tensor t) {
    auto n = constant(std::move(t));
    n->requires_grad = true;
    return n;
}

inline Value make_node(Tensor val, std::vector<Value> parents,
                       std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) { n->requires_grad = true; break; }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

// Reverse sweep from a scalar root. Grad of the root is seeded to 1.
void backward(const Value& root);

// Named parameter leaves in insertion order; names are unique.
class ParamStore {
public:
    Value add(const std::string& name, Tensor init) {
        if (index_.count(name))
            throw std::invalid_argument("ParamStore: duplicate name " + name);
        Value v = leaf(std::move(init));
        index_[name] = entries_.size();
        entries_.emplace_back(name, v);
        return v;
    }

    Value get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            throw std::out_of_range("ParamStore: unknown name " + name);
        return entries_[it->second].second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const std::vector<std::pair<std::string, Value>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& [name, v] : entries_) n += v->val.numel();
        return n;
    }

    void zero_grad() {
        for (auto& [name, v] : entries_) {
            v->ensure_grad();
            v->zero_grad();
        }
    }

private:
    std::vector<std::pair<std::string, Value>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace seqcast
