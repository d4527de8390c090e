#include "seqcast/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqcast/gradcheck.hpp"

namespace seqcast {

Model build_model(const ModelConfig& cfg) {
    Model m;
    m.cfg = cfg;
    Rng rng(cfg.seed, 1);
    m.mp = init_model_params(m.params, cfg, rng);
    return m;
}

TrainState make_train_state(const ModelConfig& cfg) {
    TrainState st{build_model(cfg), {}, CostGraph(cfg.K, cfg.beta)};
    for (const auto& [name, p] : st.model.params.entries()) {
        st.adam.m.emplace_back(p->val.shape());
        st.adam.v.emplace_back(p->val.shape());
    }
    return st;
}

void adam_step(TrainState& st, const TrainConfig& tc) {
    auto& entries = st.model.params.entries();
    // global-norm clip
    double scale = 1.0;
    if (tc.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, p] : entries)
            for (std::size_t i = 0; i < p->grad.numel(); ++i)
                sq += p->grad[i] * p->grad[i];
        if (!std::isfinite(sq))
            throw std::runtime_error("adam_step: non-finite gradient, step rejected");
        const double norm = std::sqrt(sq);
        if (norm > tc.clip_norm) scale = tc.clip_norm / norm;
    }

    ++st.adam.step;
    const double t = static_cast<double>(st.adam.step);
    const double bc1 = 1.0 - std::pow(tc.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(tc.adam_beta2, t);
    for (std::size_t e = 0; e < entries.size(); ++e) {
        auto& p = entries[e].second;
        Tensor& m = st.adam.m[e];
        Tensor& v = st.adam.v[e];
        for (std::size_t i = 0; i < p->val.numel(); ++i) {
            const double g = p->grad[i] * scale;
            if (!std::isfinite(g))
                throw std::runtime_error("adam_step: non-finite gradient at " +
                                         entries[e].first);
            m[i] = tc.adam_beta1 * m[i] + (1.0 - tc.adam_beta1) * g;
            v[i] = tc.adam_beta2 * v[i] + (1.0 - tc.adam_beta2) * g * g;
            p->val[i] -= tc.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + tc.adam_eps);
        }
    }
}

namespace {

std::vector<Tensor> snapshot_params(const ParamStore& ps) {
    std::vector<Tensor> out;
    for (const auto& [name, p] : ps.entries()) out.push_back(p->val);
    return out;
}

void restore_params(ParamStore& ps, const std::vector<Tensor>& snap) {
    const auto& entries = ps.entries();
    for (std::size_t i = 0; i < snap.size(); ++i)
        entries[i].second->val = snap[i];
}

} // namespace

TrainResult train(const ModelConfig& cfg, const TrainConfig& tc,
                  const TimeSeriesDataset& ds) {
    cfg.validate();
    if (ds.K() != cfg.K)
        throw std::invalid_argument("train: dataset has K=" +
                                    std::to_string(ds.K()) +
                                    ", config expects K=" + std::to_string(cfg.K));

    TrainResult result{make_train_state(cfg), {}, 0};
    TrainState& st = result.state;
    if (ds.standardized) {
        st.data_standardized = true;
        st.data_mean = ds.col_mean;
        st.data_std = ds.col_std;
    }

    Rng root(cfg.seed, 2);
    WindowIterator train_it(ds, Split::train, cfg.L, cfg.T, tc.batch_size, true,
                            root.split(0), tc.max_windows);

    std::vector<Tensor> best_snapshot = snapshot_params(st.model.params);
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0, since_best = 0;

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto t_start = std::chrono::steady_clock::now();
        Rng epoch_rng = root.split(epoch);
        train_it.reset(epoch_rng.split(0));

        double loss_sum = 0.0;
        std::size_t batches = 0;
        WindowBatch batch;
        while (train_it.next(batch)) {
            const std::size_t bsz = batch.x.dim(0);
            Rng step_rng = epoch_rng.split(1 + batches);

            std::vector<PermutationRecord> perms;
            std::vector<std::vector<std::size_t>> orders;
            if (tc.vpt) {
                Rng perm_rng = step_rng.split(0);
                for (std::size_t b = 0; b < bsz; ++b) {
                    perms.push_back(sample_permutation(perm_rng, cfg.K));
                    orders.push_back(perms.back().order);
                }
            }

            st.model.params.zero_grad();
            ForwardResult fwd = model_forward(batch.x, st.model.mp, cfg, orders,
                                              true, step_rng.split(1));
            MseResult loss = mse_loss(fwd.forecast, batch.y);
            backward(loss.loss);
            adam_step(st, tc);

            // Graph update is loss-driven, independent of the gradient step.
            if (tc.vpt) {
                update_cost_graph(st.graph, perms,
                                  centralize_losses(loss.per_sample));
            }

            loss_sum += loss.loss->val[0];
            ++batches;
            if (tc.max_batches_per_epoch > 0 && batches >= tc.max_batches_per_epoch)
                break;
        }
        if (batches == 0) throw std::runtime_error("train: no training batches");

        EvalResult val = evaluate(st, ds, Split::val);
        const auto t_end = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(batches);
        rec.val_mse = val.mse;
        rec.val_mae = val.mae;
        rec.seconds = std::chrono::duration<double>(t_end - t_start).count();
        result.history.push_back(rec);

        if (val.mse < best_val) {
            best_val = val.mse;
            best_epoch = epoch;
            best_snapshot = snapshot_params(st.model.params);
            since_best = 0;
        } else if (++since_best >= tc.patience) {
            break;
        }
    }

    restore_params(st.model.params, best_snapshot);
    st.best_val = best_val;
    st.trained = true;
    result.best_epoch = best_epoch;
    return result;
}

EvalResult evaluate(const TrainState& st, const TimeSeriesDataset& ds,
                    Split split, const std::vector<std::size_t>& order,
                    std::size_t batch_size) {
    if (!st.trained && st.adam.step == 0)
        throw std::runtime_error("evaluate: untrained state");
    const ModelConfig& cfg = st.model.cfg;
    std::vector<std::vector<std::size_t>> perms;
    if (!order.empty()) perms.push_back(order);

    WindowIterator it(ds, split, cfg.L, cfg.T, batch_size, false, Rng(0));
    WindowBatch batch;
    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    EvalResult res;
    while (it.next(batch)) {
        ForwardResult fwd = model_forward(batch.x, st.model.mp, cfg, perms,
                                          false, Rng(0));
        const Tensor& p = fwd.forecast->val;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double e = p[i] - batch.y[i];
            se += e * e;
            ae += std::abs(e);
        }
        n += p.numel();
        res.windows += batch.x.dim(0);
    }
    res.mse = se / static_cast<double>(n);
    res.mae = ae / static_cast<double>(n);
    return res;
}

} // namespace seqcast
