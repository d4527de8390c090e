#pragma once

#include <string>
#include <vector>

#include "seqcast/ssm.hpp"

namespace seqcast {

enum class GateMode { multiply, add };
enum class BlockVariant { temporal, vanilla }; // vanilla keeps the causal conv

struct BlockParams {
    Value in_proj_ssm;  // [d_inner, d_model]
    Value in_proj_gate; // [d_inner, d_model]
    Value out_proj;     // [d_model, d_inner]
    Value norm_scale;   // [d_model]
    Value norm_bias;    // [d_model]
    Value conv_kernel;  // [d_inner, conv_width], vanilla variant only
    SsmParams ssm;
};

struct EncoderParams {
    std::vector<BlockParams> blocks;
    Value final_scale; // [d_model]
    Value final_bias;  // [d_model]
};

struct BlockConfig {
    BlockVariant variant = BlockVariant::temporal;
    GateMode gate_mode = GateMode::multiply;
    double dropout_rate = 0.0;
};

BlockParams init_block_params(ParamStore& ps, const std::string& prefix,
                              std::size_t d_model, std::size_t d_inner,
                              std::size_t d_state, std::size_t dt_rank,
                              std::size_t conv_width, BlockVariant variant,
                              Rng& rng);

EncoderParams init_encoder_params(ParamStore& ps, std::size_t depth,
                                  std::size_t d_model, std::size_t d_inner,
                                  std::size_t d_state, std::size_t dt_rank,
                                  std::size_t conv_width, BlockVariant variant,
                                  Rng& rng);

// Pre-norm residual block: scan branch gated by a SiLU branch, projected back
// to d_model and added to the input. The temporal variant drops the causal
// conv and applies dropout on the selective path instead; the
// vanilla variant keeps the conv and uses no dropout.
Value tmb_forward(const Value& x, const BlockParams& p, const BlockConfig& cfg,
                  bool training, Rng rng);

Value vanilla_block_forward(const Value& x, const BlockParams& p,
                            GateMode gate_mode, bool training);

// N blocks in sequence followed by a final normalization.
Value encoder_forward(const Value& x, const EncoderParams& enc,
                      const BlockConfig& cfg, bool training, Rng rng);

} // namespace seqcast
