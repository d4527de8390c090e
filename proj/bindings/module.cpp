#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqcast/checkpoint.hpp"
#include "seqcast/ops.hpp"
#include "seqcast/pipeline.hpp"
#include "seqcast/ssm.hpp"
#include "seqcast/vast.hpp"

namespace py = pybind11;
using namespace seqcast;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i)
        shape[static_cast<std::size_t>(i)] =
            static_cast<std::size_t>(a.shape(i));
    Tensor t(std::move(shape));
    std::copy(a.data(), a.data() + a.size(), t.data());
    return t;
}

Array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array a(shape);
    std::copy(t.data(), t.data() + t.numel(), a.mutable_data());
    return a;
}

Array scan(const Array& u, const Array& delta, const Array& B, const Array& C,
           const Array& A_log, const Array& D) {
    ParamStore ps;
    SsmParams p;
    p.A_log = ps.add("A_log", to_tensor(A_log));
    p.D_skip = ps.add("D_skip", to_tensor(D));
    SelectedParams sel{constant(to_tensor(u)), constant(to_tensor(delta)),
                       constant(to_tensor(B)), constant(to_tensor(C))};
    return to_array(selective_scan(sel.u, sel, p)->val);
}

CostGraph graph_from_array(const Array& P, double beta) {
    Tensor t = to_tensor(P);
    if (t.shape().size() != 2 || t.dim(0) != t.dim(1))
        throw std::invalid_argument("cost matrix must be square");
    CostGraph g(t.dim(0), beta);
    g.P = std::move(t);
    return g;
}

PermutationRecord dispatch_solver(const CostGraph& g, const std::string& name,
                                  std::uint64_t seed) {
    if (name == "greedy") return solve_order_greedy(g);
    if (name == "ls") return solve_order_local_search(g, seed);
    if (name == "sa") return solve_order_sa(g, SaSchedule{}, seed);
    if (name == "bruteforce") return solve_order_bruteforce(g);
    throw std::invalid_argument("unknown solver: " + name);
}

class Forecaster {
public:
    explicit Forecaster(const std::string& checkpoint_path)
        : ckpt_(load_checkpoint(checkpoint_path)) {}

    Array predict(const Array& x, std::vector<std::size_t> order) const {
        Tensor input = to_tensor(x);
        if (input.shape().size() != 3)
            throw std::invalid_argument("input must be [batch, L, K]");
        const TrainState& st = ckpt_.state;
        Tensor scaled = input;
        if (st.data_standardized) {
            const std::size_t K = st.data_mean.numel();
            if (input.dim(2) != K)
                throw std::invalid_argument("variable count mismatch");
            for (std::size_t i = 0; i < scaled.numel(); ++i)
                scaled[i] = (scaled[i] - st.data_mean[i % K]) /
                            st.data_std[i % K];
        }
        std::vector<std::vector<std::size_t>> perms;
        if (!order.empty()) perms.push_back(std::move(order));
        ForwardResult r =
            model_forward(scaled, st.model.mp, st.model.cfg, perms,
                          /*training=*/false, Rng(0));
        Tensor out = r.forecast->val;
        if (st.data_standardized) {
            const std::size_t K = st.data_mean.numel();
            for (std::size_t i = 0; i < out.numel(); ++i)
                out[i] = out[i] * st.data_std[i % K] + st.data_mean[i % K];
        }
        return to_array(out);
    }

    std::vector<std::size_t> decode_order(const std::string& solver,
                                          std::uint64_t seed) const {
        return dispatch_solver(ckpt_.state.graph, solver, seed).order;
    }

    Array cost_graph() const { return to_array(ckpt_.state.graph.P); }
    std::size_t lookback() const { return ckpt_.state.model.cfg.L; }
    std::size_t horizon() const { return ckpt_.state.model.cfg.T; }
    std::size_t variables() const { return ckpt_.state.model.cfg.K; }

private:
    LoadedCheckpoint ckpt_;
};

} // namespace

PYBIND11_MODULE(_seqcast, m) {
    m.doc() = "selective-scan forecaster core operations";

    m.def("selective_scan", &scan, py::arg("u"), py::arg("delta"),
          py::arg("B"), py::arg("C"), py::arg("A_log"), py::arg("D"),
          "Left-to-right selective state-space recurrence with ZOH "
          "discretization. u/delta are [batch, seq, d_inner], B/C are "
          "[batch, seq, d_state], A_log is [d_inner, d_state], D is "
          "[d_inner].");

    m.def(
        "instance_normalize",
        [](const Array& x) {
            auto [xn, st] = instance_normalize(to_tensor(x));
            return py::make_tuple(to_array(xn), to_array(st.mean),
                                  to_array(st.std));
        },
        py::arg("x"),
        "Per-sample, per-channel standardization over the time axis of "
        "[batch, L, K]; returns (normalized, mean, std).");

    m.def(
        "path_cost",
        [](const Array& P, const std::vector<std::size_t>& order) {
            return path_cost(graph_from_array(P, 0.9), order);
        },
        py::arg("cost_matrix"), py::arg("order"),
        "Open-path cost of visiting variables in `order` under a [K, K] "
        "edge-cost matrix.");

    m.def(
        "solve_order",
        [](const Array& P, const std::string& solver, std::uint64_t seed) {
            CostGraph g = graph_from_array(P, 0.9);
            PermutationRecord r = dispatch_solver(g, solver, seed);
            const double c = path_cost(g, r.order);
            return py::make_tuple(r.order, c);
        },
        py::arg("cost_matrix"), py::arg("solver") = "sa", py::arg("seed") = 0,
        "Minimize the open-path cost; solver is one of greedy / ls / sa / "
        "bruteforce. Returns (order, cost).");

    m.def(
        "update_cost_graph",
        [](const Array& P, double beta,
           const std::vector<std::vector<std::size_t>>& orders,
           const std::vector<double>& losses) {
            CostGraph g = graph_from_array(P, beta);
            std::vector<PermutationRecord> perms;
            perms.reserve(orders.size());
            for (const auto& o : orders) perms.push_back({o});
            update_cost_graph(g, perms, centralize_losses(losses));
            return to_array(g.P);
        },
        py::arg("cost_matrix"), py::arg("beta"), py::arg("orders"),
        py::arg("losses"),
        "One EMA update of the edge-cost matrix from per-sample scan orders "
        "and losses (losses are centralized first). Returns the new matrix.");

    py::class_<Forecaster>(m, "Forecaster")
        .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
        .def("predict", &Forecaster::predict, py::arg("x"),
             py::arg("order") = std::vector<std::size_t>{},
             "Forecast [batch, T, K] from lookback [batch, L, K]; empty "
             "order means the identity scan order.")
        .def("decode_order", &Forecaster::decode_order,
             py::arg("solver") = "sa", py::arg("seed") = 0)
        .def("cost_graph", &Forecaster::cost_graph)
        .def_property_readonly("lookback", &Forecaster::lookback)
        .def_property_readonly("horizon", &Forecaster::horizon)
        .def_property_readonly("variables", &Forecaster::variables);
}
