#include "seqcast/ssm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace seqcast {

namespace {

// Shared forward/backward branch rule: below the threshold the coefficient is
// the first-order limit `delta`, which removes the 1/A singularity.
constexpr double kTaylorThreshold = 1e-8;

inline void zoh_step(double delta, double a, double& a_bar, double& b_coef) {
    const double z = delta * a;
    a_bar = std::exp(z);
    b_coef = std::abs(z) < kTaylorThreshold ? delta : std::expm1(z) / a;
}

} // namespace

SsmParams init_ssm_params(ParamStore& ps, const std::string& prefix,
                          std::size_t d_inner, std::size_t d_state,
                          std::size_t dt_rank, Rng& rng,
                          double dt_min, double dt_max) {
    Tensor a_log({d_inner, d_state});
    for (std::size_t c = 0; c < d_inner; ++c)
        for (std::size_t n = 0; n < d_state; ++n)
            a_log.at({c, n}) = std::log(static_cast<double>(n + 1));

    Tensor d_skip({d_inner}, 1.0);

    auto randn_mat = [&rng](std::size_t r, std::size_t c, double scale) {
        Tensor t({r, c});
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
        return t;
    };
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(d_inner));
    const double rk_scale = 1.0 / std::sqrt(static_cast<double>(dt_rank));

    // dt_bias = softplus^{-1}(dt) with dt log-uniform in [dt_min, dt_max].
    Tensor dt_bias({d_inner});
    for (std::size_t c = 0; c < d_inner; ++c) {
        double dt = std::exp(rng.uniform() * (std::log(dt_max) - std::log(dt_min)) +
                             std::log(dt_min));
        dt_bias[c] = dt + std::log(-std::expm1(-dt));
    }

    SsmParams p;
    p.A_log = ps.add(prefix + ".A_log", std::move(a_log));
    p.D_skip = ps.add(prefix + ".D_skip", std::move(d_skip));
    p.W_B = ps.add(prefix + ".W_B", randn_mat(d_state, d_inner, in_scale));
    p.W_C = ps.add(prefix + ".W_C", randn_mat(d_state, d_inner, in_scale));
    p.W_dt_down = ps.add(prefix + ".W_dt_down", randn_mat(dt_rank, d_inner, in_scale));
    p.W_dt_up = ps.add(prefix + ".W_dt_up", randn_mat(d_inner, dt_rank, rk_scale));
    p.dt_bias = ps.add(prefix + ".dt_bias", std::move(dt_bias));
    return p;
}

SelectedParams select_parameters(const Value& u, const SsmParams& p,
                                 double dropout_rate, bool training, Rng rng) {
    Value ud = dropout(u, dropout_rate, training, rng);
    Value low = linear(ud, p.W_dt_down, nullptr);
    SelectedParams out;
    out.u = ud;
    out.delta = softplus(linear(low, p.W_dt_up, p.dt_bias));
    out.B = linear(ud, p.W_B, nullptr);
    out.C = linear(ud, p.W_C, nullptr);
    return out;
}

void discretize_zoh(const Tensor& A, const Tensor& delta, Tensor& A_bar,
                    Tensor& B_coef) {
    if (A.rank() != 2 || delta.rank() != 3 || delta.dim(2) != A.dim(0))
        throw std::invalid_argument("discretize_zoh: bad shapes");
    const std::size_t batch = delta.dim(0), seq = delta.dim(1);
    const std::size_t d_inner = A.dim(0), d_state = A.dim(1);
    for (std::size_t i = 0; i < delta.numel(); ++i)
        if (!(delta[i] > 0.0))
            throw std::invalid_argument("discretize_zoh: delta must be positive");

    A_bar = Tensor({batch, seq, d_inner, d_state});
    B_coef = Tensor({batch, seq, d_inner, d_state});
    std::size_t o = 0;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < seq; ++t)
            for (std::size_t c = 0; c < d_inner; ++c) {
                const double dt = delta.at({b, t, c});
                for (std::size_t n = 0; n < d_state; ++n, ++o)
                    zoh_step(dt, A.at({c, n}), A_bar[o], B_coef[o]);
            }
}

Value selective_scan(const Value& u, const SelectedParams& sel,
                     const SsmParams& p) {
    const auto& us = u->val.shape();
    if (us.size() != 3)
        throw std::invalid_argument("selective_scan: u must be [batch, seq, d_inner]");
    const std::size_t batch = us[0], seq = us[1], d_in = us[2];
    const std::size_t d_state = p.d_state();
    if (d_in != p.d_inner())
        throw std::invalid_argument("selective_scan: d_inner mismatch");
    if (!sel.delta->val.same_shape(u->val))
        throw std::invalid_argument("selective_scan: delta shape mismatch");
    const std::vector<std::size_t> bs_shape{batch, seq, d_state};
    if (sel.B->val.shape() != bs_shape || sel.C->val.shape() != bs_shape)
        throw std::invalid_argument("selective_scan: B/C shape mismatch");
    for (std::size_t i = 0; i < sel.delta->val.numel(); ++i)
        if (!(sel.delta->val[i] > 0.0))
            throw std::invalid_argument("selective_scan: delta must be positive");

    Value A = neg_exp(p.A_log);

    // Full state trajectory kept for the reverse sweep.
    auto h_hist = std::make_shared<Tensor>(
        Tensor({batch, seq, d_in, d_state}));
    Tensor y({batch, seq, d_in});

    const double* ud = u->val.data();
    const double* dd = sel.delta->val.data();
    const double* Bd = sel.B->val.data();
    const double* Cd = sel.C->val.data();
    const double* Ad = A->val.data();
    const double* Dd = p.D_skip->val.data();
    double* hd = h_hist->data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < seq; ++t) {
            const std::size_t bt = b * seq + t;
            const double* Brow = Bd + bt * d_state;
            const double* Crow = Cd + bt * d_state;
            for (std::size_t c = 0; c < d_in; ++c) {
                const double uv = ud[bt * d_in + c];
                const double dt = dd[bt * d_in + c];
                const double* hp =
                    t > 0 ? hd + ((bt - 1) * d_in + c) * d_state : nullptr;
                double* hc = hd + (bt * d_in + c) * d_state;
                double acc = 0.0;
                for (std::size_t n = 0; n < d_state; ++n) {
                    double a_bar, b_coef;
                    zoh_step(dt, Ad[c * d_state + n], a_bar, b_coef);
                    double h = b_coef * Brow[n] * uv;
                    if (hp) h += a_bar * hp[n];
                    hc[n] = h;
                    acc += Crow[n] * h;
                }
                const double yv = acc + Dd[c] * uv;
                if (!std::isfinite(yv))
                    throw std::runtime_error(
                        "selective_scan: non-finite value at step " +
                        std::to_string(t));
                y[bt * d_in + c] = yv;
            }
        }
    }

    std::vector<Value> parents{u, sel.delta, sel.B, sel.C, A, p.D_skip};
    return make_node(std::move(y), std::move(parents),
                     [batch, seq, d_in, d_state, h_hist](Node& n) {
        auto& u = n.parents[0];
        auto& delta = n.parents[1];
        auto& B = n.parents[2];
        auto& C = n.parents[3];
        auto& A = n.parents[4];
        auto& D = n.parents[5];
        const double* ud = u->val.data();
        const double* dd = delta->val.data();
        const double* Bd = B->val.data();
        const double* Cd = C->val.data();
        const double* Ad = A->val.data();
        const double* Dd = D->val.data();
        const double* hd = h_hist->data();
        const double* gy = n.grad.data();

        std::vector<double> gh(d_state);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t c = 0; c < d_in; ++c) {
                std::fill(gh.begin(), gh.end(), 0.0);
                for (std::size_t t = seq; t-- > 0;) {
                    const std::size_t bt = b * seq + t;
                    const std::size_t uidx = bt * d_in + c;
                    const double uv = ud[uidx];
                    const double dt = dd[uidx];
                    const double g_out = gy[uidx];
                    const double* Brow = Bd + bt * d_state;
                    const double* Crow = Cd + bt * d_state;
                    const double* hc = hd + (bt * d_in + c) * d_state;
                    const double* hp =
                        t > 0 ? hd + ((bt - 1) * d_in + c) * d_state : nullptr;

                    // y_t = C_t . h_t + D u_t
                    if (D->requires_grad) D->grad[c] += g_out * uv;
                    double gu_acc = u->requires_grad ? g_out * Dd[c] : 0.0;
                    for (std::size_t n2 = 0; n2 < d_state; ++n2) {
                        gh[n2] += g_out * Crow[n2];
                        if (C->requires_grad)
                            C->grad[bt * d_state + n2] += g_out * hc[n2];
                    }

                    // h_t = A_bar h_{t-1} + B_coef B_t u_t
                    double gdt_acc = 0.0;
                    for (std::size_t n2 = 0; n2 < d_state; ++n2) {
                        const double a = Ad[c * d_state + n2];
                        const double z = dt * a;
                        const double a_bar = std::exp(z);
                        const bool taylor = std::abs(z) < kTaylorThreshold;
                        const double b_coef = taylor ? dt : std::expm1(z) / a;
                        const double g = gh[n2];
                        const double hprev = hp ? hp[n2] : 0.0;
                        const double bu = Brow[n2] * uv;

                        gu_acc += g * b_coef * Brow[n2];
                        if (B->requires_grad)
                            B->grad[bt * d_state + n2] += g * b_coef * uv;
                        const double dbcoef_ddt = taylor ? 1.0 : a_bar;
                        gdt_acc += g * (a * a_bar * hprev + dbcoef_ddt * bu);
                        if (A->requires_grad) {
                            const double dbcoef_da =
                                taylor ? 0.0 : (dt * a_bar - b_coef) / a;
                            A->grad[c * d_state + n2] +=
                                g * (dt * a_bar * hprev + dbcoef_da * bu);
                        }
                        gh[n2] = g * a_bar; // flows to h_{t-1}
                    }
                    if (u->requires_grad) u->grad[uidx] += gu_acc;
                    if (delta->requires_grad) delta->grad[uidx] += gdt_acc;
                }
            }
        }
    });
}

} // namespace seqcast
