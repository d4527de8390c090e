#include "seqcast/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcast {

namespace {
double eval_scalar(const std::function<Value()>& forward) {
    Value v = forward();
    if (v->val.numel() != 1)
        throw std::invalid_argument("grad_check: forward must return a scalar");
    double f = v->val[0];
    if (!std::isfinite(f))
        throw std::runtime_error("grad_check: non-finite function value");
    return f;
}
} // namespace

double grad_check(const std::function<Value()>& forward, ParamStore& params,
                  double step) {
    params.zero_grad();
    backward(forward());

    double worst = 0.0;
    for (auto& [name, p] : params.entries()) {
        for (std::size_t i = 0; i < p->val.numel(); ++i) {
            const double saved = p->val[i];
            p->val[i] = saved + step;
            const double f_plus = eval_scalar(forward);
            p->val[i] = saved - step;
            const double f_minus = eval_scalar(forward);
            p->val[i] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * step);
            const double analytic = p->grad[i];
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-12});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

} // namespace seqcast
