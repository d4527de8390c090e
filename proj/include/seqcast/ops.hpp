#pragma once

#include <cstddef>
#include <vector>

#include "seqcast/autodiff.hpp"
#include "seqcast/rng.hpp"

namespace seqcast {

// Elementwise. Shapes must match exactly (no implicit broadcasting).
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double c);

Value silu(const Value& x);     // x * sigmoid(x)
Value softplus(const Value& x); // ln(1 + e^x), stabilized
Value neg_exp(const Value& x);  // -exp(x)

// Affine map along the trailing dimension: x[..., in] -> [..., out].
// weight is [out, in]; bias (optional, may be null) is [out].
Value linear(const Value& x, const Value& weight, const Value& bias);

// Layer normalization over the trailing dimension with learned affine.
Value layer_norm(const Value& x, const Value& gain, const Value& bias,
                 double eps = 1e-6);

// Inverted dropout; identity in eval mode. Mask is a pure function of rng.
Value dropout(const Value& x, double rate, bool training, Rng rng);

// out[i] = x[index[i]]; backward scatter-adds. Covers reshape-with-permute
// plumbing (patching, interleave, transpose).
Value gather(const Value& x, std::vector<std::size_t> out_shape,
             std::vector<std::size_t> index);

// Same data under a new shape (element count preserved).
Value reshape(const Value& x, std::vector<std::size_t> shape);

// Depthwise causal convolution over [batch, seq, channels] with left padding:
//   out[b,t,c] = sum_w kernel[c,w] * x[b,t-w,c].
Value causal_conv1d(const Value& x, const Value& kernel);

// Mean over all elements, as a scalar node.
Value mean_all(const Value& x);

// Mean squared error against a constant target; also reports the per-sample
// means over the trailing dims (sample = leading-dim slice).
struct MseResult {
    Value loss;                      // scalar, mean over all elements
    std::vector<double> per_sample;  // one value per leading index
};
MseResult mse_loss(const Value& pred, const Tensor& target);

double mae_metric(const Tensor& pred, const Tensor& target);

// Throws std::runtime_error naming `stage` if any element is non-finite.
void check_finite(const Tensor& t, const char* stage);

} // namespace seqcast
