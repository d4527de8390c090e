#include "seqcast/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcast {

namespace {

void validate_perm(const std::vector<std::size_t>& perm, std::size_t K) {
    if (perm.size() != K)
        throw std::invalid_argument("permutation length != K");
    std::vector<bool> seen(K, false);
    for (auto v : perm) {
        if (v >= K || seen[v])
            throw std::invalid_argument("permutation is not a bijection on {0..K-1}");
        seen[v] = true;
    }
}

} // namespace

void ModelConfig::validate() const {
    if (K < 1) throw std::invalid_argument("config: K must be >= 1");
    if (T < 1) throw std::invalid_argument("config: T must be >= 1");
    if (s < 1 || L < 1 || L % s != 0)
        throw std::invalid_argument("config: L must be a positive multiple of s");
    if (N < 1) throw std::invalid_argument("config: N must be >= 1");
    if (d_model < 1) throw std::invalid_argument("config: d_model must be >= 1");
    if (d_state < 1) throw std::invalid_argument("config: d_state must be >= 1");
    if (expand < 1) throw std::invalid_argument("config: expand must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("config: dropout_rate must be in [0,1)");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("config: beta must be in (0,1)");
    if (block_variant == BlockVariant::vanilla && conv_width < 1)
        throw std::invalid_argument("config: conv_width must be >= 1");
}

ModelParams init_model_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams mp;
    const double es = 1.0 / std::sqrt(static_cast<double>(cfg.s));
    Tensor embed({cfg.d_model, cfg.s});
    for (std::size_t i = 0; i < embed.numel(); ++i) embed[i] = rng.normal() * es;
    mp.embed = ps.add("embed", std::move(embed));

    mp.encoder = init_encoder_params(ps, cfg.N, cfg.d_model, cfg.d_inner(),
                                     cfg.d_state, cfg.dt_rank(), cfg.conv_width,
                                     cfg.block_variant, rng);

    const std::size_t flat = cfg.M() * cfg.d_model;
    const double hs = 1.0 / std::sqrt(static_cast<double>(flat));
    Tensor head({cfg.T, flat});
    for (std::size_t i = 0; i < head.numel(); ++i) head[i] = rng.normal() * hs;
    mp.head = ps.add("head", std::move(head));
    return mp;
}

std::pair<Tensor, NormStats> instance_normalize(const Tensor& x, double epsilon) {
    if (x.rank() != 3)
        throw std::invalid_argument("instance_normalize: x must be [batch, L, K]");
    const std::size_t batch = x.dim(0), L = x.dim(1), K = x.dim(2);

    NormStats st;
    st.epsilon = epsilon;
    st.mean = Tensor({batch, K});
    st.std = Tensor({batch, K});
    Tensor out(x.shape());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t k = 0; k < K; ++k) {
            double mean = 0.0;
            for (std::size_t l = 0; l < L; ++l) mean += x.at({b, l, k});
            mean /= static_cast<double>(L);
            double var = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                double d = x.at({b, l, k}) - mean;
                var += d * d;
            }
            var /= static_cast<double>(L); // population variance
            const double sd = std::sqrt(var);
            st.mean.at({b, k}) = mean;
            st.std.at({b, k}) = sd;
            const double inv = 1.0 / (sd + epsilon);
            for (std::size_t l = 0; l < L; ++l)
                out.at({b, l, k}) = (x.at({b, l, k}) - mean) * inv;
        }
    return {std::move(out), std::move(st)};
}

Value denormalize(const Value& y_norm, const NormStats& stats) {
    const auto& ys = y_norm->val.shape();
    if (ys.size() != 3 || ys[0] != stats.mean.dim(0) || ys[2] != stats.mean.dim(1))
        throw std::invalid_argument("denormalize: batch/K mismatch with stats");
    const std::size_t batch = ys[0], T = ys[1], K = ys[2];

    Tensor scale_full({batch, T, K});
    Tensor shift_full({batch, T, K});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t k = 0; k < K; ++k) {
                scale_full.at({b, t, k}) = stats.std.at({b, k}) + stats.epsilon;
                shift_full.at({b, t, k}) = stats.mean.at({b, k});
            }
    return add(mul(y_norm, constant(std::move(scale_full))),
               constant(std::move(shift_full)));
}

Value patchify_embed(const Value& x_norm, const Value& embed, std::size_t s) {
    const auto& xs = x_norm->val.shape();
    if (xs.size() != 3)
        throw std::invalid_argument("patchify_embed: x must be [batch, L, K]");
    const std::size_t batch = xs[0], L = xs[1], K = xs[2];
    if (s == 0 || L % s != 0)
        throw std::invalid_argument("patchify_embed: L must be a multiple of s");
    const std::size_t M = L / s;

    // [batch, L, K] -> [batch, K, M, s]
    std::vector<std::size_t> index(batch * K * M * s);
    std::size_t o = 0;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t j = 0; j < s; ++j, ++o)
                    index[o] = (b * L + m * s + j) * K + k;
    Value patches = gather(x_norm, {batch, K, M, s}, std::move(index));
    return linear(patches, embed, nullptr);
}

TokenSequence vst_arrange(const Value& tokens,
                          std::vector<std::vector<std::size_t>> perms) {
    const auto& ts = tokens->val.shape();
    if (ts.size() != 4)
        throw std::invalid_argument("vst_arrange: tokens must be [batch, K, M, d]");
    const std::size_t batch = ts[0], K = ts[1], M = ts[2], d = ts[3];
    if (perms.empty()) perms.assign(1, identity_order(K));
    if (perms.size() != 1 && perms.size() != batch)
        throw std::invalid_argument("vst_arrange: need 1 or batch permutations");
    for (const auto& p : perms) validate_perm(p, K);

    std::vector<std::size_t> index(tokens->val.numel());
    std::size_t o = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        const auto& perm = perms[perms.size() == 1 ? 0 : b];
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t r = 0; r < K; ++r)
                for (std::size_t j = 0; j < d; ++j, ++o)
                    index[o] = ((b * K + perm[r]) * M + m) * d + j;
    }
    TokenSequence seq;
    seq.tokens = gather(tokens, {batch, K * M, d}, std::move(index));
    seq.perms = std::move(perms);
    seq.layout = TokenLayout::vst;
    seq.K = K;
    seq.M = M;
    return seq;
}

Value vst_restore(const TokenSequence& seq) {
    if (seq.layout != TokenLayout::vst)
        throw std::runtime_error("vst_restore: sequence is not in vst layout");
    const auto& ts = seq.tokens->val.shape();
    const std::size_t batch = ts[0], K = seq.K, M = seq.M, d = ts[2];
    if (ts[1] != K * M)
        throw std::runtime_error("vst_restore: token count != K*M");

    std::vector<std::size_t> index(seq.tokens->val.numel());
    for (std::size_t b = 0; b < batch; ++b) {
        const auto& perm = seq.perms[seq.perms.size() == 1 ? 0 : b];
        std::vector<std::size_t> rank_of(K); // variable -> position in perm
        for (std::size_t r = 0; r < K; ++r) rank_of[perm[r]] = r;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t j = 0; j < d; ++j)
                    index[((b * K + k) * M + m) * d + j] =
                        (b * (K * M) + m * K + rank_of[k]) * d + j;
    }
    return gather(seq.tokens, {batch, K, M, d}, std::move(index));
}

Value predict_head(const Value& encoded, const Value& head, std::size_t T) {
    const auto& es = encoded->val.shape();
    if (es.size() != 4)
        throw std::invalid_argument("predict_head: encoded must be [batch, K, M, d]");
    const std::size_t batch = es[0], K = es[1], M = es[2], d = es[3];
    if (head->val.dim(1) != M * d)
        throw std::invalid_argument("predict_head: head input dim != M*d_model");

    Value flat = reshape(encoded, {batch, K, M * d});
    Value per_var = linear(flat, head, nullptr); // [batch, K, T]

    // transpose to [batch, T, K]
    std::vector<std::size_t> index(batch * T * K);
    std::size_t o = 0;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t k = 0; k < K; ++k, ++o)
                index[o] = (b * K + k) * T + t;
    return gather(per_var, {batch, T, K}, std::move(index));
}

ForwardResult model_forward(const Tensor& x, const ModelParams& params,
                            const ModelConfig& cfg,
                            std::vector<std::vector<std::size_t>> perms,
                            bool training, Rng rng) {
    cfg.validate();
    if (x.rank() != 3 || x.dim(1) != cfg.L || x.dim(2) != cfg.K)
        throw std::invalid_argument("model_forward: x must be [batch, L, K]");
    check_finite(x, "model input");
    const std::size_t batch = x.dim(0);

    auto [x_norm, stats] = instance_normalize(x);
    Value tokens = patchify_embed(constant(std::move(x_norm)), params.embed, cfg.s);

    BlockConfig bcfg;
    bcfg.variant = cfg.block_variant;
    bcfg.gate_mode = cfg.gate_mode;
    bcfg.dropout_rate = cfg.dropout_rate;

    Value restored;
    if (cfg.vst) {
        TokenSequence seq = vst_arrange(tokens, std::move(perms));
        seq.tokens = encoder_forward(seq.tokens, params.encoder, bcfg, training,
                                     rng.split(0));
        restored = vst_restore(seq);
    } else {
        // Channel-independent scan: each variable is its own length-M sequence.
        Value flat = reshape(tokens, {batch * cfg.K, cfg.M(), cfg.d_model});
        Value enc = encoder_forward(flat, params.encoder, bcfg, training,
                                    rng.split(0));
        restored = reshape(enc, {batch, cfg.K, cfg.M(), cfg.d_model});
    }

    Value y_norm = predict_head(restored, params.head, cfg.T);
    ForwardResult out;
    out.forecast = denormalize(y_norm, stats);
    out.stats = std::move(stats);
    check_finite(out.forecast->val, "model output");
    return out;
}

std::vector<std::size_t> identity_order(std::size_t K) {
    std::vector<std::size_t> p(K);
    for (std::size_t i = 0; i < K; ++i) p[i] = i;
    return p;
}

} // namespace seqcast
