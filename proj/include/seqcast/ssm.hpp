#pragma once

#include <cstddef>

#include "seqcast/autodiff.hpp"
#include "seqcast/ops.hpp"
#include "seqcast/rng.hpp"

namespace seqcast {

// Parameters of one selective SSM layer. The state matrix is diagonal per
// channel and strictly negative: A = -exp(A_log).
struct SsmParams {
    Value A_log;    // [d_inner, d_state]
    Value D_skip;   // [d_inner]
    Value W_B;      // [d_state, d_inner]
    Value W_C;      // [d_state, d_inner]
    Value W_dt_down; // [dt_rank, d_inner]
    Value W_dt_up;  // [d_inner, dt_rank]
    Value dt_bias;  // [d_inner]

    std::size_t d_inner() const { return A_log->val.dim(0); }
    std::size_t d_state() const { return A_log->val.dim(1); }
};

// Registers and initializes one layer's parameters under `prefix.`.
// -A spans {1..d_state} per channel; dt_bias is set so that softplus(dt_bias)
// lands log-uniformly in [dt_min, dt_max].
SsmParams init_ssm_params(ParamStore& ps, const std::string& prefix,
                          std::size_t d_inner, std::size_t d_state,
                          std::size_t dt_rank, Rng& rng,
                          double dt_min = 1e-3, double dt_max = 1e-1);

struct SelectedParams {
    Value u;     // input after dropout; feed this to the scan
    Value delta; // [batch, seq, d_inner], strictly positive
    Value B;     // [batch, seq, d_state]
    Value C;     // [batch, seq, d_state]
};

// Data-dependent step size and input/output projections. Dropout (training
// mode only) is applied to u before all three projections; the dropped input
// is returned so the scan sees the same mask.
SelectedParams select_parameters(const Value& u, const SsmParams& p,
                                 double dropout_rate, bool training, Rng rng);

// ZOH step factors per (batch, step, channel, state):
//   A_bar = exp(delta * A)
//   B_coef = (exp(delta * A) - 1) / A, Taylor limit `delta` when |delta*A| < 1e-8.
// Exposed for direct testing; selective_scan computes the same quantities
// inline. Rejects non-positive delta.
void discretize_zoh(const Tensor& A, const Tensor& delta, Tensor& A_bar,
                    Tensor& B_coef);

// Strict left-to-right recurrence
//   h_k = A_bar_k h_{k-1} + B_coef_k B_k u_k,   y_k = C_k . h_k + D u_k
// over [batch, seq, d_inner] input with diagonal per-channel state.
Value selective_scan(const Value& u, const SelectedParams& sel,
                     const SsmParams& p);

} // namespace seqcast
