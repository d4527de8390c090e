#include "seqcast/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace seqcast {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

void require_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a->val.same_shape(b->val))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    a->val.shape_str() + " vs " + b->val.shape_str());
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace

Value add(const Value& a, const Value& b) {
    require_same_shape(a, b, "add");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
            auto& p = n.parents[k];
            if (!p->requires_grad) continue;
            for (std::size_t i = 0; i < n.grad.numel(); ++i) p->grad[i] += n.grad[i];
        }
    });
}

Value sub(const Value& a, const Value& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        auto& a = n.parents[0];
        auto& b = n.parents[1];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            if (a->requires_grad) a->grad[i] += n.grad[i];
            if (b->requires_grad) b->grad[i] -= n.grad[i];
        }
    });
}

Value mul(const Value& a, const Value& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        auto& a = n.parents[0];
        auto& b = n.parents[1];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            if (a->requires_grad) a->grad[i] += n.grad[i] * b->val[i];
            if (b->requires_grad) b->grad[i] += n.grad[i] * a->val[i];
        }
    });
}

Value scale(const Value& a, double c) {
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    return make_node(std::move(out), {a}, [c](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += c * n.grad[i];
    });
}

Value silu(const Value& x) {
    Tensor out = x->val;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= sigmoid(out[i]);
    return make_node(std::move(out), {x}, [](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            double s = sigmoid(x->val[i]);
            x->grad[i] += n.grad[i] * (s + x->val[i] * s * (1.0 - s));
        }
    });
}

Value softplus(const Value& x) {
    Tensor out(x->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double v = x->val[i];
        // ln(1+e^v) = max(v,0) + log1p(e^{-|v|})
        out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    }
    return make_node(std::move(out), {x}, [](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            x->grad[i] += n.grad[i] * sigmoid(x->val[i]);
    });
}

Value neg_exp(const Value& x) {
    Tensor out(x->val.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = -std::exp(x->val[i]);
    return make_node(std::move(out), {x}, [](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            x->grad[i] += n.grad[i] * n.val[i];
    });
}

Value linear(const Value& x, const Value& weight, const Value& bias) {
    const auto& xs = x->val.shape();
    const auto& ws = weight->val.shape();
    if (ws.size() != 2)
        throw std::invalid_argument("linear: weight must be rank 2");
    const std::size_t in = ws[1], out_dim = ws[0];
    if (xs.empty() || xs.back() != in)
        throw std::invalid_argument("linear: trailing dim of x (" + x->val.shape_str() +
                                    ") != weight input dim " + std::to_string(in));
    if (bias && bias->val.numel() != out_dim)
        throw std::invalid_argument("linear: bias size mismatch");
    const std::size_t rows = x->val.numel() / in;

    std::vector<std::size_t> oshape(xs.begin(), xs.end() - 1);
    oshape.push_back(out_dim);
    Tensor out(std::move(oshape));

    MapCM X(x->val.data(), rows, in);
    MapCM W(weight->val.data(), out_dim, in);
    MapM Y(out.data(), rows, out_dim);
    Y.noalias() = X * W.transpose();
    if (bias) {
        Eigen::Map<const Eigen::RowVectorXd> b(bias->val.data(), out_dim);
        Y.rowwise() += b;
    }

    std::vector<Value> parents{x, weight};
    if (bias) parents.push_back(bias);
    return make_node(std::move(out), std::move(parents),
                     [rows, in, out_dim](Node& n) {
        auto& x = n.parents[0];
        auto& w = n.parents[1];
        MapCM G(n.grad.data(), rows, out_dim);
        MapCM X(x->val.data(), rows, in);
        MapCM W(w->val.data(), out_dim, in);
        if (x->requires_grad) {
            MapM GX(x->grad.data(), rows, in);
            GX.noalias() += G * W;
        }
        if (w->requires_grad) {
            MapM GW(w->grad.data(), out_dim, in);
            GW.noalias() += G.transpose() * X;
        }
        if (n.parents.size() == 3 && n.parents[2]->requires_grad) {
            Eigen::Map<Eigen::RowVectorXd> GB(n.parents[2]->grad.data(), out_dim);
            GB += G.colwise().sum();
        }
    });
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps) {
    const auto& xs = x->val.shape();
    const std::size_t d = xs.back();
    if (gain->val.numel() != d || bias->val.numel() != d)
        throw std::invalid_argument("layer_norm: affine size mismatch");
    const std::size_t rows = x->val.numel() / d;

    Tensor out(xs);
    // Saved per row for backward: mean and inverse std.
    auto saved = std::make_shared<std::vector<double>>(2 * rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x->val.data() + r * d;
        double mean = 0.0;
        for (std::size_t i = 0; i < d; ++i) mean += xr[i];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
        var /= static_cast<double>(d);
        double inv = 1.0 / std::sqrt(var + eps);
        (*saved)[2 * r] = mean;
        (*saved)[2 * r + 1] = inv;
        double* yr = out.data() + r * d;
        for (std::size_t i = 0; i < d; ++i)
            yr[i] = (xr[i] - mean) * inv * gain->val[i] + bias->val[i];
    }
    return make_node(std::move(out), {x, gain, bias},
                     [rows, d, saved](Node& n) {
        auto& x = n.parents[0];
        auto& gain = n.parents[1];
        auto& bias = n.parents[2];
        for (std::size_t r = 0; r < rows; ++r) {
            const double mean = (*saved)[2 * r], inv = (*saved)[2 * r + 1];
            const double* xr = x->val.data() + r * d;
            const double* gr = n.grad.data() + r * d;
            // xhat_i = (x_i - mean) * inv
            double sum_gy_g = 0.0, sum_gy_g_xhat = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double xhat = (xr[i] - mean) * inv;
                double gyg = gr[i] * gain->val[i];
                sum_gy_g += gyg;
                sum_gy_g_xhat += gyg * xhat;
                if (gain->requires_grad) gain->grad[i] += gr[i] * xhat;
                if (bias->requires_grad) bias->grad[i] += gr[i];
            }
            if (x->requires_grad) {
                double* gx = x->grad.data() + r * d;
                const double dn = static_cast<double>(d);
                for (std::size_t i = 0; i < d; ++i) {
                    double xhat = (xr[i] - mean) * inv;
                    double gyg = gr[i] * gain->val[i];
                    gx[i] += inv * (gyg - sum_gy_g / dn - xhat * sum_gy_g_xhat / dn);
                }
            }
        }
    });
}

Value dropout(const Value& x, double rate, bool training, Rng rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) return x; // bit-identical eval path
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(x->val.numel());
    Tensor out = x->val;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double m = rng.uniform() >= rate ? 1.0 / keep : 0.0;
        (*mask)[i] = m;
        out[i] *= m;
    }
    return make_node(std::move(out), {x}, [mask](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            x->grad[i] += n.grad[i] * (*mask)[i];
    });
}

Value gather(const Value& x, std::vector<std::size_t> out_shape,
             std::vector<std::size_t> index) {
    const std::size_t n_out = Tensor::numel_of(out_shape);
    if (index.size() != n_out)
        throw std::invalid_argument("gather: index size != output size");
    Tensor out(std::move(out_shape));
    for (std::size_t i = 0; i < n_out; ++i) {
        if (index[i] >= x->val.numel())
            throw std::out_of_range("gather: index out of range");
        out[i] = x->val[index[i]];
    }
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(index));
    return make_node(std::move(out), {x}, [idx](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            x->grad[(*idx)[i]] += n.grad[i];
    });
}

Value reshape(const Value& x, std::vector<std::size_t> shape) {
    Tensor out = x->val.reshaped(std::move(shape));
    return make_node(std::move(out), {x}, [](Node& n) {
        auto& x = n.parents[0];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) x->grad[i] += n.grad[i];
    });
}

Value causal_conv1d(const Value& x, const Value& kernel) {
    const auto& xs = x->val.shape();
    const auto& ks = kernel->val.shape();
    if (xs.size() != 3 || ks.size() != 2 || ks[0] != xs[2])
        throw std::invalid_argument("causal_conv1d: bad shapes");
    const std::size_t batch = xs[0], seq = xs[1], ch = xs[2], width = ks[1];

    Tensor out(xs);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < seq; ++t)
            for (std::size_t c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t w = 0; w < width && w <= t; ++w)
                    acc += kernel->val[c * width + w] *
                           x->val[(b * seq + t - w) * ch + c];
                out[(b * seq + t) * ch + c] = acc;
            }
    return make_node(std::move(out), {x, kernel},
                     [batch, seq, ch, width](Node& n) {
        auto& x = n.parents[0];
        auto& k = n.parents[1];
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < seq; ++t)
                for (std::size_t c = 0; c < ch; ++c) {
                    const double g = n.grad[(b * seq + t) * ch + c];
                    for (std::size_t w = 0; w < width && w <= t; ++w) {
                        const std::size_t xi = (b * seq + t - w) * ch + c;
                        if (x->requires_grad)
                            x->grad[xi] += g * k->val[c * width + w];
                        if (k->requires_grad)
                            k->grad[c * width + w] += g * x->val[xi];
                    }
                }
    });
}

Value mean_all(const Value& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x->val.numel(); ++i) s += x->val[i];
    const double inv = 1.0 / static_cast<double>(x->val.numel());
    return make_node(Tensor::scalar(s * inv), {x}, [inv](Node& n) {
        auto& x = n.parents[0];
        const double g = n.grad[0] * inv;
        for (std::size_t i = 0; i < x->grad.numel(); ++i) x->grad[i] += g;
    });
}

MseResult mse_loss(const Value& pred, const Tensor& target) {
    if (!pred->val.same_shape(target))
        throw std::invalid_argument("mse_loss: shape mismatch");
    const std::size_t batch = pred->val.dim(0);
    const std::size_t per = pred->val.numel() / batch;
    std::vector<double> per_sample(batch, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            double e = pred->val[b * per + i] - target[b * per + i];
            s += e * e;
        }
        per_sample[b] = s / static_cast<double>(per);
    }
    double total = 0.0;
    for (double v : per_sample) total += v;
    total /= static_cast<double>(batch);

    auto tgt = std::make_shared<Tensor>(target);
    const double inv_n = 1.0 / static_cast<double>(pred->val.numel());
    Value loss = make_node(Tensor::scalar(total), {pred}, [tgt, inv_n](Node& n) {
        auto& p = n.parents[0];
        const double g = 2.0 * n.grad[0] * inv_n;
        for (std::size_t i = 0; i < p->grad.numel(); ++i)
            p->grad[i] += g * (p->val[i] - (*tgt)[i]);
    });
    if (!std::isfinite(total))
        throw std::runtime_error("mse_loss: non-finite loss");
    return {loss, std::move(per_sample)};
}

double mae_metric(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("mae_metric: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i)
        s += std::abs(pred[i] - target[i]);
    return s / static_cast<double>(pred.numel());
}

void check_finite(const Tensor& t, const char* stage) {
    std::size_t i = t.first_nonfinite();
    if (i != t.numel())
        throw std::runtime_error(std::string("non-finite value at ") + stage +
                                 " (flat index " + std::to_string(i) + ")");
}

} // namespace seqcast
