#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

struct SplitRange {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
    std::size_t length() const { return end - begin; }
};

enum class Split { train, val, test };

struct TimeSeriesDataset {
    Tensor values; // [total_steps, K]
    std::vector<std::string> columns;
    SplitRange train, val, test;
    // Column standardization by train-split statistics, when applied.
    bool standardized = false;
    Tensor col_mean; // [K]
    Tensor col_std;  // [K]

    std::size_t K() const { return values.dim(1); }
    std::size_t total_steps() const { return values.dim(0); }
    const SplitRange& range(Split s) const {
        return s == Split::train ? train : s == Split::val ? val : test;
    }
};

// Header row with a leading timestamp column, then K numeric columns.
// Chronological split by `ratios`; expected_k == 0 accepts any width.
// When standardize is set, all columns are shifted/scaled by the train
// split's mean and std.
TimeSeriesDataset load_csv(const std::string& path, std::size_t expected_k = 0,
                           double train_ratio = 0.7, double val_ratio = 0.1,
                           bool standardize = true);

TimeSeriesDataset dataset_from_values(Tensor values, double train_ratio = 0.7,
                                      double val_ratio = 0.1,
                                      bool standardize = true);

// FNV-1a over the raw file bytes, hex string; used in run manifests.
std::string file_fingerprint(const std::string& path);

struct WindowBatch {
    Tensor x; // [batch, L, K]
    Tensor y; // [batch, T, K]
};

// All maximal stride-1 windows of a split, batched. Shuffled order is drawn
// from rng; pass shuffle=false for chronological order. The last partial
// batch is kept.
class WindowIterator {
public:
    WindowIterator(const TimeSeriesDataset& ds, Split split, std::size_t L,
                   std::size_t T, std::size_t batch_size, bool shuffle,
                   Rng rng, std::size_t max_windows = 0);

    std::size_t num_windows() const { return starts_.size(); }
    std::size_t num_batches() const;
    bool next(WindowBatch& out);
    void reset(Rng rng);

private:
    const TimeSeriesDataset& ds_;
    std::size_t L_, T_, batch_size_;
    bool shuffle_;
    std::vector<std::size_t> starts_;
    std::size_t cursor_ = 0;
};

// Deterministic ETT-style multivariate series: daily/weekly harmonics with
// AR(1) noise and cross-variable coupling. Hourly timestamps in the CSV.
Tensor synth_ett_values(std::size_t steps, std::size_t K, std::uint64_t seed);
void write_ett_csv(const std::string& path, std::size_t steps, std::size_t K,
                   std::uint64_t seed);

// AR(1) panel for the dropout/training property checks.
Tensor synth_ar_values(std::size_t steps, std::size_t K, double phi,
                       std::uint64_t seed);

// Repeat-last-value forecast MSE/MAE over all windows of a split.
struct BaselineResult {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t windows = 0;
};
BaselineResult persistence_baseline(const TimeSeriesDataset& ds, Split split,
                                    std::size_t L, std::size_t T);

} // namespace seqcast
