#include "seqcast/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqcast {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

void apply_splits(TimeSeriesDataset& ds, double train_ratio, double val_ratio,
                  bool standardize) {
    const std::size_t n = ds.total_steps();
    const std::size_t n_train = static_cast<std::size_t>(
        static_cast<double>(n) * train_ratio);
    const std::size_t n_val = static_cast<std::size_t>(
        static_cast<double>(n) * val_ratio);
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument("dataset: split ratios leave an empty split");
    ds.train = {0, n_train};
    ds.val = {n_train, n_train + n_val};
    ds.test = {n_train + n_val, n};

    if (standardize) {
        const std::size_t K = ds.K();
        ds.col_mean = Tensor({K});
        ds.col_std = Tensor({K});
        for (std::size_t k = 0; k < K; ++k) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n_train; ++i) mean += ds.values.at({i, k});
            mean /= static_cast<double>(n_train);
            double var = 0.0;
            for (std::size_t i = 0; i < n_train; ++i) {
                const double d = ds.values.at({i, k}) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n_train);
            const double sd = std::sqrt(var);
            ds.col_mean[k] = mean;
            ds.col_std[k] = sd;
            const double inv = 1.0 / (sd > 0.0 ? sd : 1.0);
            for (std::size_t i = 0; i < n; ++i)
                ds.values.at({i, k}) = (ds.values.at({i, k}) - mean) * inv;
        }
        ds.standardized = true;
    }
}

} // namespace

TimeSeriesDataset load_csv(const std::string& path, std::size_t expected_k,
                           double train_ratio, double val_ratio,
                           bool standardize) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line, ',');
    if (header.size() < 2)
        throw std::runtime_error("load_csv: need a timestamp column plus data columns");
    const std::size_t K = header.size() - 1;
    if (expected_k != 0 && K != expected_k)
        throw std::invalid_argument("load_csv: file has K=" + std::to_string(K) +
                                    " but config expects K=" +
                                    std::to_string(expected_k));

    TimeSeriesDataset ds;
    ds.columns.assign(header.begin() + 1, header.end());

    std::vector<double> data;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line, ',');
        if (cells.size() != K + 1)
            throw std::runtime_error("load_csv: row " + std::to_string(row) +
                                     " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(K + 1));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            std::size_t used = 0;
            double v = 0.0;
            bool ok = !cells[c].empty();
            if (ok) {
                try {
                    v = std::stod(cells[c], &used);
                } catch (const std::exception&) {
                    ok = false;
                }
            }
            if (!ok || used != cells[c].size())
                throw std::runtime_error("load_csv: non-numeric cell at row " +
                                         std::to_string(row) + ", column " +
                                         std::to_string(c + 1) + " ('" +
                                         cells[c] + "')");
            data.push_back(v);
        }
    }
    if (data.empty()) throw std::runtime_error("load_csv: no data rows in " + path);
    const std::size_t rows = data.size() / K;
    ds.values = Tensor({rows, K}, std::move(data));
    apply_splits(ds, train_ratio, val_ratio, standardize);
    return ds;
}

TimeSeriesDataset dataset_from_values(Tensor values, double train_ratio,
                                      double val_ratio, bool standardize) {
    if (values.rank() != 2)
        throw std::invalid_argument("dataset_from_values: values must be [steps, K]");
    TimeSeriesDataset ds;
    for (std::size_t k = 0; k < values.dim(1); ++k)
        ds.columns.push_back("v" + std::to_string(k));
    ds.values = std::move(values);
    apply_splits(ds, train_ratio, val_ratio, standardize);
    return ds;
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_fingerprint: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

WindowIterator::WindowIterator(const TimeSeriesDataset& ds, Split split,
                               std::size_t L, std::size_t T,
                               std::size_t batch_size, bool shuffle, Rng rng,
                               std::size_t max_windows)
    : ds_(ds), L_(L), T_(T), batch_size_(batch_size), shuffle_(shuffle) {
    const SplitRange& r = ds.range(split);
    if (r.length() < L + T)
        throw std::invalid_argument(
            "make_windows: split too short (" + std::to_string(r.length()) +
            " < L+T=" + std::to_string(L + T) + ")");
    const std::size_t n = r.length() - (L + T) + 1;
    starts_.resize(n);
    for (std::size_t i = 0; i < n; ++i) starts_[i] = r.begin + i;
    reset(rng);
    if (max_windows > 0 && starts_.size() > max_windows)
        starts_.resize(max_windows);
}

std::size_t WindowIterator::num_batches() const {
    return (starts_.size() + batch_size_ - 1) / batch_size_;
}

void WindowIterator::reset(Rng rng) {
    cursor_ = 0;
    if (shuffle_) {
        for (std::size_t i = starts_.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(starts_[i - 1], starts_[j]);
        }
    }
}

bool WindowIterator::next(WindowBatch& out) {
    if (cursor_ >= starts_.size()) return false;
    const std::size_t n = std::min(batch_size_, starts_.size() - cursor_);
    const std::size_t K = ds_.K();
    out.x = Tensor({n, L_, K});
    out.y = Tensor({n, T_, K});
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t s0 = starts_[cursor_ + b];
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t k = 0; k < K; ++k)
                out.x.at({b, l, k}) = ds_.values.at({s0 + l, k});
        for (std::size_t t = 0; t < T_; ++t)
            for (std::size_t k = 0; k < K; ++k)
                out.y.at({b, t, k}) = ds_.values.at({s0 + L_ + t, k});
    }
    cursor_ += n;
    return true;
}

Tensor synth_ett_values(std::size_t steps, std::size_t K, std::uint64_t seed) {
    Rng rng(seed, 7);
    Tensor out({steps, K});
    const double two_pi = 6.283185307179586;

    // Per-variable harmonic mix + AR(1) noise; later variables lag earlier
    // ones so the cost graph has something real to learn.
    std::vector<double> phase(K), amp_day(K), amp_week(K), trend(K), noise(K, 0.0);
    std::vector<double> ar(K);
    for (std::size_t k = 0; k < K; ++k) {
        phase[k] = rng.uniform(0.0, two_pi);
        amp_day[k] = rng.uniform(0.6, 1.4);
        amp_week[k] = rng.uniform(0.2, 0.6);
        trend[k] = rng.uniform(-2e-4, 2e-4);
        ar[k] = rng.uniform(0.55, 0.85);
    }
    for (std::size_t t = 0; t < steps; ++t) {
        const double td = static_cast<double>(t);
        for (std::size_t k = 0; k < K; ++k) {
            noise[k] = ar[k] * noise[k] + 0.25 * rng.normal();
            const double lag = static_cast<double>(k) * 2.0;
            double v = amp_day[k] * std::sin(two_pi * (td - lag) / 24.0 + phase[k]) +
                       amp_week[k] * std::sin(two_pi * (td - lag) / 168.0) +
                       trend[k] * td + noise[k];
            if (k > 0) v += 0.6 * out.at({t, k - 1}); // same-step coupling
            out.at({t, k}) = v;
        }
    }
    return out;
}

void write_ett_csv(const std::string& path, std::size_t steps, std::size_t K,
                   std::uint64_t seed) {
    Tensor v = synth_ett_values(steps, K, seed);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_ett_csv: cannot open " + path);
    out << "date";
    for (std::size_t k = 0; k < K; ++k) out << ",var" << k;
    out << '\n';
    out.precision(17); // shortest round-trippable double representation
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t day = t / 24, hour = t % 24;
        char ts[32];
        std::snprintf(ts, sizeof(ts), "2016-07-%02zu %02zu:00:00", 1 + day % 28,
                      hour);
        out << ts;
        for (std::size_t k = 0; k < K; ++k) out << ',' << v.at({t, k});
        out << '\n';
    }
}

Tensor synth_ar_values(std::size_t steps, std::size_t K, double phi,
                       std::uint64_t seed) {
    Rng rng(seed, 11);
    Tensor out({steps, K});
    std::vector<double> state(K, 0.0);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            state[k] = phi * state[k] + rng.normal();
            out.at({t, k}) = state[k];
        }
    return out;
}

BaselineResult persistence_baseline(const TimeSeriesDataset& ds, Split split,
                                    std::size_t L, std::size_t T) {
    WindowIterator it(ds, split, L, T, 256, false, Rng(0));
    BaselineResult res;
    WindowBatch batch;
    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    while (it.next(batch)) {
        const std::size_t bsz = batch.x.dim(0);
        const std::size_t K = batch.x.dim(2);
        for (std::size_t b = 0; b < bsz; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t k = 0; k < K; ++k) {
                    const double e =
                        batch.x.at({b, L - 1, k}) - batch.y.at({b, t, k});
                    se += e * e;
                    ae += std::abs(e);
                    ++n;
                }
        res.windows += bsz;
    }
    res.mse = se / static_cast<double>(n);
    res.mae = ae / static_cast<double>(n);
    return res;
}

} // namespace seqcast
