#include "seqcast/tmb.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcast {

namespace {

Tensor randn(std::vector<std::size_t> shape, double scale, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
    return t;
}

Value merge_branches(const Value& a, const Value& b, GateMode mode) {
    return mode == GateMode::multiply ? mul(a, b) : add(a, b);
}

} // namespace

BlockParams init_block_params(ParamStore& ps, const std::string& prefix,
                              std::size_t d_model, std::size_t d_inner,
                              std::size_t d_state, std::size_t dt_rank,
                              std::size_t conv_width, BlockVariant variant,
                              Rng& rng) {
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(d_model));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(d_inner));

    BlockParams p;
    p.in_proj_ssm = ps.add(prefix + ".in_proj_ssm",
                           randn({d_inner, d_model}, in_scale, rng));
    p.in_proj_gate = ps.add(prefix + ".in_proj_gate",
                            randn({d_inner, d_model}, in_scale, rng));
    p.out_proj = ps.add(prefix + ".out_proj",
                        randn({d_model, d_inner}, out_scale, rng));
    p.norm_scale = ps.add(prefix + ".norm_scale", Tensor({d_model}, 1.0));
    p.norm_bias = ps.add(prefix + ".norm_bias", Tensor({d_model}, 0.0));
    if (variant == BlockVariant::vanilla)
        p.conv_kernel = ps.add(
            prefix + ".conv_kernel",
            randn({d_inner, conv_width},
                  1.0 / std::sqrt(static_cast<double>(conv_width)), rng));
    p.ssm = init_ssm_params(ps, prefix + ".ssm", d_inner, d_state, dt_rank, rng);
    return p;
}

EncoderParams init_encoder_params(ParamStore& ps, std::size_t depth,
                                  std::size_t d_model, std::size_t d_inner,
                                  std::size_t d_state, std::size_t dt_rank,
                                  std::size_t conv_width, BlockVariant variant,
                                  Rng& rng) {
    if (depth < 1) throw std::invalid_argument("encoder: depth must be >= 1");
    EncoderParams enc;
    for (std::size_t i = 0; i < depth; ++i)
        enc.blocks.push_back(init_block_params(
            ps, "encoder.block" + std::to_string(i), d_model, d_inner, d_state,
            dt_rank, conv_width, variant, rng));
    enc.final_scale = ps.add("encoder.final_scale", Tensor({d_model}, 1.0));
    enc.final_bias = ps.add("encoder.final_bias", Tensor({d_model}, 0.0));
    return enc;
}

Value tmb_forward(const Value& x, const BlockParams& p, const BlockConfig& cfg,
                  bool training, Rng rng) {
    Value xn = layer_norm(x, p.norm_scale, p.norm_bias);
    Value u = linear(xn, p.in_proj_ssm, nullptr);

    SelectedParams sel;
    if (cfg.variant == BlockVariant::vanilla) {
        if (!p.conv_kernel)
            throw std::runtime_error("vanilla block requires conv_kernel");
        Value uc = causal_conv1d(u, p.conv_kernel);
        sel = select_parameters(uc, p.ssm, 0.0, training, rng);
    } else {
        sel = select_parameters(u, p.ssm, cfg.dropout_rate, training, rng);
    }
    Value scan = selective_scan(sel.u, sel, p.ssm);
    Value gate = silu(linear(xn, p.in_proj_gate, nullptr));
    Value merged = merge_branches(scan, gate, cfg.gate_mode);
    return add(x, linear(merged, p.out_proj, nullptr));
}

Value vanilla_block_forward(const Value& x, const BlockParams& p,
                            GateMode gate_mode, bool training) {
    BlockConfig cfg;
    cfg.variant = BlockVariant::vanilla;
    cfg.gate_mode = gate_mode;
    return tmb_forward(x, p, cfg, training, Rng(0));
}

Value encoder_forward(const Value& x, const EncoderParams& enc,
                      const BlockConfig& cfg, bool training, Rng rng) {
    Value h = x;
    for (std::size_t i = 0; i < enc.blocks.size(); ++i)
        h = tmb_forward(h, enc.blocks[i], cfg, training, rng.split(i));
    return layer_norm(h, enc.final_scale, enc.final_bias);
}

} // namespace seqcast
