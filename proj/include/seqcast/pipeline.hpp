#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqcast/tmb.hpp"

namespace seqcast {

struct ModelConfig {
    std::size_t K = 1;       // variable count
    std::size_t L = 96;      // lookback length
    std::size_t T = 96;      // forecast horizon
    std::size_t s = 16;      // patch length == stride (non-overlapping)
    std::size_t d_model = 64;
    std::size_t N = 2;       // encoder depth
    std::size_t d_state = 16;
    std::size_t expand = 2;
    std::size_t conv_width = 4; // vanilla block variant only
    double dropout_rate = 0.2;
    GateMode gate_mode = GateMode::multiply;
    BlockVariant block_variant = BlockVariant::temporal;
    bool vst = true; // interleave variables; off = channel-independent scan
    double beta = 0.9; // cost-graph EMA rate
    std::uint64_t seed = 1;

    std::size_t M() const { return L / s; }
    std::size_t d_inner() const { return expand * d_model; }
    std::size_t dt_rank() const { return (d_inner() + 15) / 16; }

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct NormStats {
    Tensor mean; // [batch, K]
    Tensor std;  // [batch, K], population std (may be 0)
    double epsilon = 1e-5;
};

struct ModelParams {
    Value embed; // [d_model, s]
    Value head;  // [T, M * d_model], shared across variables
    EncoderParams encoder;
};

ModelParams init_model_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Per sample and channel standardization over the lookback window.
std::pair<Tensor, NormStats> instance_normalize(const Tensor& x,
                                                double epsilon = 1e-5);

// y = y_norm * (std + eps) + mean, broadcast over the time axis.
Value denormalize(const Value& y_norm, const NormStats& stats);

// [batch, L, K] -> [batch, K, M, d_model]: non-overlapping length-s patches
// per channel, each projected by `embed`.
Value patchify_embed(const Value& x_norm, const Value& embed, std::size_t s);

enum class TokenLayout { vst, per_variable };

struct TokenSequence {
    Value tokens; // vst: [batch, K*M, d_model]
    std::vector<std::vector<std::size_t>> perms; // one bijection per sample
    TokenLayout layout = TokenLayout::per_variable;
    std::size_t K = 0, M = 0;
};

// Interleaves [batch, K, M, d] so that flat index m*K + r holds variable
// perms[b][r] at patch m. One permutation shared by all samples is passed as
// a single-entry perms vector.
TokenSequence vst_arrange(const Value& tokens,
                          std::vector<std::vector<std::size_t>> perms);

// Exact inverse of vst_arrange, including permutation inversion.
Value vst_restore(const TokenSequence& seq);

// [batch, K, M, d_model] -> [batch, T, K]; one shared linear head per
// variable, no cross-variable mixing.
Value predict_head(const Value& encoded, const Value& head, std::size_t T);

struct ForwardResult {
    Value forecast; // [batch, T, K], denormalized
    NormStats stats;
};

// Full pass: normalize, patchify, interleave (honoring cfg.vst), encode,
// restore, decode, denormalize. `perms` empty means identity order.
ForwardResult model_forward(const Tensor& x, const ModelParams& params,
                            const ModelConfig& cfg,
                            std::vector<std::vector<std::size_t>> perms,
                            bool training, Rng rng);

std::vector<std::size_t> identity_order(std::size_t K);

} // namespace seqcast
