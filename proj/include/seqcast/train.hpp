#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqcast/config.hpp"
#include "seqcast/dataset.hpp"
#include "seqcast/vast.hpp"

namespace seqcast {

struct Model {
    ModelConfig cfg;
    ParamStore params;
    ModelParams mp;
};

// Fresh model with seed-deterministic initialization.
Model build_model(const ModelConfig& cfg);

struct AdamState {
    std::vector<Tensor> m; // first moments, parallel to params.entries()
    std::vector<Tensor> v; // second moments
    std::uint64_t step = 0;
};

struct TrainState {
    Model model;
    AdamState adam;
    CostGraph graph;
    double best_val = 0.0;
    bool trained = false;
    // Dataset standardization stats carried for reproducible evaluation.
    bool data_standardized = false;
    Tensor data_mean, data_std;
};

TrainState make_train_state(const ModelConfig& cfg);

// One bias-corrected Adam update over every parameter. Rejects non-finite
// gradients. clip_norm > 0 rescales the global gradient norm first.
void adam_step(TrainState& st, const TrainConfig& tc);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0;
    double val_mae = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    TrainState state;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

// Full optimization loop: permuted training samples (when tc.vpt), EMA
// cost-graph updates from centralized per-sample losses, per-epoch
// validation with the identity order, early stopping, best-epoch weights
// restored on return.
TrainResult train(const ModelConfig& cfg, const TrainConfig& tc,
                  const TimeSeriesDataset& ds);

struct EvalResult {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t windows = 0;
};

// Deterministic eval-mode pass over all windows of a split with a fixed
// variable order (empty = identity).
EvalResult evaluate(const TrainState& st, const TimeSeriesDataset& ds,
                    Split split, const std::vector<std::size_t>& order = {},
                    std::size_t batch_size = 64);

} // namespace seqcast
