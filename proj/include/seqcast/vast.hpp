#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

// Directed edge costs between variables: P[i*K+j] is the cost of scanning j
// immediately after i. Diagonal entries are never read by solvers.
struct CostGraph {
    Tensor P; // [K, K]
    double beta = 0.9;
    std::uint64_t update_count = 0;

    explicit CostGraph(std::size_t K = 1, double beta_ = 0.9)
        : P({K, K}, 0.0), beta(beta_) {}
    std::size_t K() const { return P.dim(0); }
};

struct PermutationRecord {
    std::vector<std::size_t> order; // bijection on {0..K-1}
};

struct SaSchedule {
    std::optional<double> t0; // unset: derive from the edge-cost spread
    double alpha = 0.995;     // geometric cooling factor, in (0,1)
    std::size_t iters_per_k = 2000; // iterations = iters_per_k * K per restart
    std::size_t restarts = 8;
};

PermutationRecord sample_permutation(Rng& rng, std::size_t K);

// l_bar = l - mean(l); output sums to zero.
std::vector<double> centralize_losses(const std::vector<double>& losses);

// EMA over the K-1 consecutive edges of each sample's order:
//   p[v_k][v_{k+1}] <- beta * p + (1 - beta) * l_bar.
void update_cost_graph(CostGraph& graph,
                       const std::vector<PermutationRecord>& perms,
                       const std::vector<double>& centered);

// Open Hamiltonian path cost (no closing edge).
double path_cost(const CostGraph& graph, const std::vector<std::size_t>& order);

// Best-of-K nearest-neighbor construction; ties to the lowest index.
PermutationRecord solve_order_greedy(const CostGraph& graph);

// Greedy start, then best-improvement pairwise swaps and single-node
// relocations to a local optimum.
PermutationRecord solve_order_local_search(const CostGraph& graph,
                                           std::uint64_t seed = 0);

// Simulated annealing with swap + segment-reversal moves and geometric
// cooling; returns the best order ever visited across restarts. Never worse
// than the greedy construction.
PermutationRecord solve_order_sa(const CostGraph& graph,
                                 const SaSchedule& schedule,
                                 std::uint64_t seed);

// Exhaustive minimum over all K! open paths; K <= 10 guard.
// Ties break to the lexicographically smallest order.
PermutationRecord solve_order_bruteforce(const CostGraph& graph);

} // namespace seqcast
