#include "seqcast/vast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqcast {

PermutationRecord sample_permutation(Rng& rng, std::size_t K) {
    if (K < 1) throw std::invalid_argument("sample_permutation: K must be >= 1");
    return {rng.permutation(K)};
}

std::vector<double> centralize_losses(const std::vector<double>& losses) {
    if (losses.empty())
        throw std::invalid_argument("centralize_losses: empty batch");
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= static_cast<double>(losses.size());
    std::vector<double> out(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) out[i] = losses[i] - mean;
    return out;
}

void update_cost_graph(CostGraph& graph,
                       const std::vector<PermutationRecord>& perms,
                       const std::vector<double>& centered) {
    if (perms.size() != centered.size())
        throw std::invalid_argument("update_cost_graph: perms/losses size mismatch");
    const std::size_t K = graph.K();
    for (std::size_t b = 0; b < perms.size(); ++b) {
        const auto& order = perms[b].order;
        if (order.size() != K)
            throw std::invalid_argument("update_cost_graph: permutation length != K");
        const double l = centered[b];
        for (std::size_t k = 0; k + 1 < K; ++k) {
            double& p = graph.P.at({order[k], order[k + 1]});
            p = graph.beta * p + (1.0 - graph.beta) * l;
        }
    }
    ++graph.update_count;
}

double path_cost(const CostGraph& graph, const std::vector<std::size_t>& order) {
    const std::size_t K = graph.K();
    if (order.size() != K)
        throw std::invalid_argument("path_cost: order must visit all variables");
    std::vector<bool> seen(K, false);
    for (std::size_t v : order) {
        if (v >= K || seen[v])
            throw std::invalid_argument("path_cost: order is not a bijection");
        seen[v] = true;
    }
    double cost = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k)
        cost += graph.P.at({order[k], order[k + 1]});
    return cost;
}

PermutationRecord solve_order_greedy(const CostGraph& graph) {
    const std::size_t K = graph.K();
    std::vector<std::size_t> best;
    double best_cost = 0.0;
    for (std::size_t start = 0; start < K; ++start) {
        std::vector<std::size_t> order{start};
        std::vector<bool> used(K, false);
        used[start] = true;
        double cost = 0.0;
        for (std::size_t step = 1; step < K; ++step) {
            const std::size_t cur = order.back();
            std::size_t pick = K;
            double pick_cost = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (used[j]) continue;
                const double c = graph.P.at({cur, j});
                if (pick == K || c < pick_cost) { // strict: ties keep lowest j
                    pick = j;
                    pick_cost = c;
                }
            }
            order.push_back(pick);
            used[pick] = true;
            cost += pick_cost;
        }
        if (best.empty() || cost < best_cost) {
            best = std::move(order);
            best_cost = cost;
        }
    }
    return {std::move(best)};
}

PermutationRecord solve_order_local_search(const CostGraph& graph,
                                           std::uint64_t seed) {
    (void)seed; // moves are evaluated deterministically; no randomness needed
    const std::size_t K = graph.K();
    std::vector<std::size_t> order = solve_order_greedy(graph).order;
    if (K < 2) return {std::move(order)};

    double cost = path_cost(graph, order);
    bool improved = true;
    while (improved) {
        improved = false;
        std::vector<std::size_t> best_move = order;
        double best_cost = cost;
        // all pairwise swaps
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = i + 1; j < K; ++j) {
                std::vector<std::size_t> cand = order;
                std::swap(cand[i], cand[j]);
                const double c = path_cost(graph, cand);
                if (c < best_cost - 1e-15) {
                    best_cost = c;
                    best_move = std::move(cand);
                }
            }
        // all single-node relocations
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < K; ++j) {
                if (i == j) continue;
                std::vector<std::size_t> cand = order;
                const std::size_t node = cand[i];
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
                cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(j), node);
                const double c = path_cost(graph, cand);
                if (c < best_cost - 1e-15) {
                    best_cost = c;
                    best_move = std::move(cand);
                }
            }
        if (best_cost < cost - 1e-15) {
            order = std::move(best_move);
            cost = best_cost;
            improved = true;
        }
    }
    return {std::move(order)};
}

PermutationRecord solve_order_sa(const CostGraph& graph,
                                 const SaSchedule& schedule,
                                 std::uint64_t seed) {
    if (schedule.t0.has_value() && !(*schedule.t0 > 0.0))
        throw std::invalid_argument("solve_order_sa: t0 must be > 0");
    if (!(schedule.alpha > 0.0 && schedule.alpha < 1.0))
        throw std::invalid_argument("solve_order_sa: alpha must be in (0,1)");
    const std::size_t K = graph.K();
    // Seed best-ever with the local-search optimum so the annealer can only
    // improve on it; this keeps sa <= local search <= greedy under any budget.
    std::vector<std::size_t> best = solve_order_local_search(graph, seed).order;
    double best_cost = path_cost(graph, best);
    if (K < 2) return {std::move(best)};

    double t0 = schedule.t0.value_or(0.0);
    if (t0 <= 0.0) {
        // Spread of the off-diagonal edge costs sets the starting temperature.
        double mean = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < K; ++j) {
                if (i == j) continue;
                const double c = graph.P.at({i, j});
                mean += c;
                sq += c * c;
                ++n;
            }
        mean /= static_cast<double>(n);
        const double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
        t0 = std::sqrt(var);
        if (t0 <= 0.0) t0 = 1.0; // flat graph: any order is optimal anyway
    }

    Rng rng(seed);
    const std::size_t iters = schedule.iters_per_k * K;
    for (std::size_t restart = 0; restart < schedule.restarts; ++restart) {
        Rng r = rng.split(restart);
        std::vector<std::size_t> cur =
            restart == 0 ? best : r.permutation(K);
        double cur_cost = path_cost(graph, cur);
        if (cur_cost < best_cost) {
            best = cur;
            best_cost = cur_cost;
        }
        double temp = t0;
        std::vector<std::size_t> cand;
        for (std::size_t it = 0; it < iters; ++it) {
            cand = cur;
            std::size_t i = static_cast<std::size_t>(r.below(K));
            std::size_t j = static_cast<std::size_t>(r.below(K));
            while (j == i) j = static_cast<std::size_t>(r.below(K));
            if (i > j) std::swap(i, j);
            const double move = r.uniform();
            if (move < 1.0 / 3.0) {
                std::swap(cand[i], cand[j]);
            } else if (move < 2.0 / 3.0) {
                std::reverse(cand.begin() + static_cast<std::ptrdiff_t>(i),
                             cand.begin() + static_cast<std::ptrdiff_t>(j + 1));
            } else {
                // Relocate: pull out position i and reinsert before j. Swap
                // and reversal alone leave reachable local optima at K >= 7.
                const std::size_t v = cand[i];
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
                cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(j - 1),
                            v);
            }
            const double c = path_cost(graph, cand);
            const double d = c - cur_cost;
            if (d <= 0.0 || r.uniform() < std::exp(-d / temp)) {
                cur.swap(cand);
                cur_cost = c;
                if (cur_cost < best_cost) {
                    best = cur;
                    best_cost = cur_cost;
                }
            }
            temp *= schedule.alpha;
        }
    }
    return {std::move(best)};
}

PermutationRecord solve_order_bruteforce(const CostGraph& graph) {
    const std::size_t K = graph.K();
    if (K > 10)
        throw std::invalid_argument("solve_order_bruteforce: refused for K > 10");
    std::vector<std::size_t> perm(K);
    for (std::size_t i = 0; i < K; ++i) perm[i] = i;
    std::vector<std::size_t> best = perm;
    double best_cost = path_cost(graph, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
        const double c = path_cost(graph, perm);
        if (c < best_cost - 1e-15) { // lexicographic enumeration keeps ties lowest
            best = perm;
            best_cost = c;
        }
    }
    return {std::move(best)};
}


} // namespace seqcast
