#pragma once

#include <map>
#include <string>

#include "seqcast/pipeline.hpp"

namespace seqcast {

struct TrainConfig {
    double lr = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 1.0; // 0 disables
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::size_t patience = 3;
    bool vpt = true; // permute variables per training sample
    std::size_t max_batches_per_epoch = 0; // 0 = all
    std::size_t max_windows = 0;           // 0 = all (train split cap)
    double train_ratio = 0.7;
    double val_ratio = 0.1;
    bool standardize = true;
};

// Flat key=value text, one pair per line, '#' comments. Keys mirror the
// ModelConfig / TrainConfig field names.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> read_kv_file(const std::string& path);

void apply_config(const std::map<std::string, std::string>& kv,
                  ModelConfig& model, TrainConfig& train);

std::string config_to_text(const ModelConfig& model, const TrainConfig& train);

} // namespace seqcast
