#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "seqcast/vast.hpp"

using namespace seqcast;

namespace {

CostGraph random_graph(std::size_t K, Rng& rng) {
    CostGraph g(K);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            g.P.at({i, j}) = i == j ? 0.0 : rng.normal();
    return g;
}

// Independent exhaustive enumerator used to cross-check the solvers. Written
// against the raw matrix, not CostGraph helpers.
std::vector<std::size_t> enumerate_best(const Tensor& P) {
    const std::size_t K = P.dim(0);
    std::vector<std::size_t> idx(K);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::size_t> best = idx;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t k = 0; k + 1 < K; ++k)
            c += P.at({idx[k], idx[k + 1]});
        if (c < best_cost) {
            best_cost = c;
            best = idx;
        }
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

} // namespace

TEST_CASE("sample_permutation: valid bijections, roughly uniform for K=3") {
    Rng rng(1);
    std::map<std::vector<std::size_t>, int> counts;
    const int trials = 6000;
    for (int t = 0; t < trials; ++t) {
        PermutationRecord r = sample_permutation(rng, 3);
        REQUIRE(r.order.size() == 3);
        std::vector<std::size_t> sorted = r.order;
        std::sort(sorted.begin(), sorted.end());
        REQUIRE(sorted == std::vector<std::size_t>{0, 1, 2});
        counts[r.order]++;
    }
    CHECK(counts.size() == 6);
    for (auto& [perm, n] : counts) {
        CHECK(n > trials / 6 * 0.85);
        CHECK(n < trials / 6 * 1.15);
    }
}

TEST_CASE("centralize_losses sums to zero and preserves differences") {
    std::vector<double> l = {1.0, 2.0, 6.0};
    std::vector<double> c = centralize_losses(l);
    CHECK(c[0] == doctest::Approx(-2.0));
    CHECK(c[1] == doctest::Approx(-1.0));
    CHECK(c[2] == doctest::Approx(3.0));
    CHECK(c[0] + c[1] + c[2] == doctest::Approx(0.0));
    CHECK(centralize_losses({5.0})[0] == 0.0);
}

TEST_CASE("update_cost_graph: single worked example") {
    CostGraph g(3, 0.9);
    PermutationRecord r{{0, 2, 1}};
    update_cost_graph(g, {r}, {0.2});
    // touched edges: 0->2 and 2->1, each 0.9*0 + 0.1*0.2 = 0.02
    CHECK(g.P.at({0, 2}) == doctest::Approx(0.02));
    CHECK(g.P.at({2, 1}) == doctest::Approx(0.02));
    CHECK(g.P.at({0, 1}) == 0.0);
    CHECK(g.P.at({1, 0}) == 0.0);
    CHECK(g.update_count == 1);
}

TEST_CASE("update_cost_graph: two sequential updates compose as an EMA") {
    CostGraph g(2, 0.9);
    PermutationRecord r{{0, 1}};
    const double a = 0.4, b = -0.1;
    update_cost_graph(g, {r}, {a});
    update_cost_graph(g, {r}, {b});
    CHECK(g.P.at({0, 1}) ==
          doctest::Approx(0.9 * (0.1 * a) + 0.1 * b).epsilon(1e-14));
    CHECK(g.update_count == 2);
}

TEST_CASE("update_cost_graph: batch entries touch only their own edges") {
    CostGraph g(4, 0.5);
    std::vector<PermutationRecord> perms = {{{0, 1, 2, 3}}, {{3, 2, 1, 0}}};
    update_cost_graph(g, perms, {1.0, -1.0});
    CHECK(g.P.at({0, 1}) == doctest::Approx(0.5));
    CHECK(g.P.at({1, 2}) == doctest::Approx(0.5));
    CHECK(g.P.at({2, 1}) == doctest::Approx(-0.5));
    CHECK(g.P.at({1, 0}) == doctest::Approx(-0.5));
    CHECK(g.P.at({0, 3}) == 0.0);
    CHECK(g.update_count == 1);
}

TEST_CASE("update_cost_graph rejects mismatched batch sizes") {
    CostGraph g(3);
    CHECK_THROWS_AS(update_cost_graph(g, {{{0, 1, 2}}}, {0.1, 0.2}),
                    std::invalid_argument);
}

TEST_CASE("path_cost: hand cases and open-path property") {
    CostGraph g(3);
    g.P.at({0, 1}) = 1.0;
    g.P.at({1, 2}) = 2.0;
    g.P.at({2, 0}) = 100.0; // must NOT be counted (open path)
    CHECK(path_cost(g, {0, 1, 2}) == doctest::Approx(3.0));
    CHECK(path_cost(g, {2, 0, 1}) == doctest::Approx(101.0));
    CHECK_THROWS_AS(path_cost(g, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(path_cost(g, {0, 1, 1}), std::invalid_argument);
}

TEST_CASE("greedy: forced chain is recovered exactly") {
    // Make 2->0->3->1 strictly cheapest edge-by-edge from every start.
    CostGraph g(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) g.P.at({i, j}) = 10.0;
    g.P.at({2, 0}) = -5.0;
    g.P.at({0, 3}) = -5.0;
    g.P.at({3, 1}) = -5.0;
    PermutationRecord r = solve_order_greedy(g);
    CHECK(r.order == std::vector<std::size_t>{2, 0, 3, 1});
}

TEST_CASE("greedy tie-break goes to the lowest index") {
    CostGraph g(3); // all-zero costs: every path ties
    PermutationRecord r = solve_order_greedy(g);
    CHECK(r.order == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("solver ordering: sa <= local search <= greedy <= random, 40 graphs") {
    Rng rng(7);
    SaSchedule sched;
    sched.iters_per_k = 300;
    sched.restarts = 2;
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t K = 4 + static_cast<std::size_t>(rng.below(5));
        CostGraph g = random_graph(K, rng);
        double cg = path_cost(g, solve_order_greedy(g).order);
        double cl = path_cost(g, solve_order_local_search(g).order);
        double cs = path_cost(g, solve_order_sa(g, sched, trial).order);
        double cb = path_cost(g, solve_order_bruteforce(g).order);
        CHECK(cl <= cg + 1e-12);
        CHECK(cs <= cl + 1e-12);
        CHECK(cb <= cs + 1e-12);
    }
}

TEST_CASE("bruteforce: hand-enumerated K=3 instance") {
    CostGraph g(3);
    // costs: 01=3 02=1 10=9 12=4 20=2 21=0
    g.P.at({0, 1}) = 3; g.P.at({0, 2}) = 1;
    g.P.at({1, 0}) = 9; g.P.at({1, 2}) = 4;
    g.P.at({2, 0}) = 2; g.P.at({2, 1}) = 0;
    // all 6 open paths: 012=7 021=1 102=10 120=11 201=2 210=9 -> best 021
    PermutationRecord r = solve_order_bruteforce(g);
    CHECK(r.order == std::vector<std::size_t>{0, 2, 1});
    CHECK(path_cost(g, r.order) == doctest::Approx(1.0));
}

TEST_CASE("bruteforce tie-break is lexicographic") {
    CostGraph g(3); // all zero: every order costs 0
    CHECK(solve_order_bruteforce(g).order == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("bruteforce agrees with an independent enumerator, K in 3..6") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t K = 3 + static_cast<std::size_t>(rng.below(4));
        CostGraph g = random_graph(K, rng);
        PermutationRecord r = solve_order_bruteforce(g);
        std::vector<std::size_t> want = enumerate_best(g.P);
        CHECK(path_cost(g, r.order) ==
              doctest::Approx(path_cost(g, want)).epsilon(1e-12));
    }
}

TEST_CASE("bruteforce guard: K > 10 rejected") {
    CostGraph g(11);
    CHECK_THROWS_AS(solve_order_bruteforce(g), std::invalid_argument);
}

TEST_CASE("sa: K=2 returns the cheaper direction; bad schedules rejected") {
    CostGraph g(2);
    g.P.at({0, 1}) = 5.0;
    g.P.at({1, 0}) = -3.0;
    SaSchedule sched;
    CHECK(solve_order_sa(g, sched, 0).order ==
          std::vector<std::size_t>{1, 0});

    SaSchedule bad_t0;
    bad_t0.t0 = -1.0;
    CHECK_THROWS_AS(solve_order_sa(g, bad_t0, 0), std::invalid_argument);
    SaSchedule bad_alpha;
    bad_alpha.alpha = 1.5;
    CHECK_THROWS_AS(solve_order_sa(g, bad_alpha, 0), std::invalid_argument);
}

TEST_CASE("sa is deterministic for a fixed seed") {
    Rng rng(13);
    CostGraph g = random_graph(6, rng);
    SaSchedule sched;
    sched.iters_per_k = 200;
    sched.restarts = 2;
    PermutationRecord a = solve_order_sa(g, sched, 42);
    PermutationRecord b = solve_order_sa(g, sched, 42);
    CHECK(a.order == b.order);
}

TEST_CASE("solvers touch every vertex exactly once") {
    Rng rng(17);
    CostGraph g = random_graph(7, rng);
    SaSchedule sched;
    sched.iters_per_k = 100;
    sched.restarts = 1;
    for (auto& r : {solve_order_greedy(g), solve_order_local_search(g),
                    solve_order_sa(g, sched, 1)}) {
        std::vector<std::size_t> sorted = r.order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> want(7);
        std::iota(want.begin(), want.end(), 0);
        CHECK(sorted == want);
    }
}
