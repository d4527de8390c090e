#include "seqcast/autodiff.hpp"

#include <stdexcept>
#include <unordered_set>

namespace seqcast {

void backward(const Value& root) {
    if (root->val.numel() != 1)
        throw std::invalid_argument("backward: root must be a scalar");
    if (!root->requires_grad) return;

    // Iterative post-order DFS; the reversed finish order is a valid
    // topological order for the reverse sweep.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second)
                stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior nodes are reset each sweep; leaf grads accumulate so callers
    // control zeroing (ParamStore::zero_grad).
    for (Node* n : order) {
        n->ensure_grad();
        if (n->backprop) n->zero_grad();
    }
    root->zero_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) {
            for (auto& p : n->parents)
                if (p->requires_grad) p->ensure_grad();
            n->backprop(*n);
        }
    }
}

} // namespace seqcast
