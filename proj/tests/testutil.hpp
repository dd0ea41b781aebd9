#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "djrhr/tensor.hpp"

namespace testutil {

template <typename T>
void fill_uniform(djrhr::TensorT<T>& t, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (T& v : t.vec()) v = static_cast<T>(dist(rng));
}

template <typename T>
djrhr::TensorT<T> random_tensor(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                                std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    djrhr::TensorT<T> t(n, c, h, w);
    fill_uniform(t, rng, lo, hi);
    return t;
}

// Naive cross-correlation in double, the independent oracle for conv2d.
inline djrhr::TensorT<double> conv2d_oracle(const djrhr::TensorT<double>& x,
                                            const djrhr::TensorT<double>& w,
                                            const std::vector<double>& bias, int stride, int pad) {
    const auto& xd = x.dims();
    const auto& wd = w.dims();
    const std::int64_t k = wd.h;
    const std::int64_t oh = (xd.h + 2 * pad - k) / stride + 1;
    const std::int64_t ow = (xd.w + 2 * pad - k) / stride + 1;
    djrhr::TensorT<double> out(xd.n, wd.n, oh, ow);
    for (std::int64_t n = 0; n < xd.n; ++n)
        for (std::int64_t oc = 0; oc < wd.n; ++oc)
            for (std::int64_t oy = 0; oy < oh; ++oy)
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double acc = bias[static_cast<std::size_t>(oc)];
                    for (std::int64_t ic = 0; ic < xd.c; ++ic)
                        for (std::int64_t ky = 0; ky < k; ++ky)
                            for (std::int64_t kx = 0; kx < k; ++kx) {
                                const std::int64_t iy = oy * stride - pad + ky;
                                const std::int64_t ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= xd.h || ix < 0 || ix >= xd.w) continue;
                                acc += w.at(oc, ic, ky, kx) * x.at(n, ic, iy, ix);
                            }
                    out.at(n, oc, oy, ox) = acc;
                }
    return out;
}

// Central finite differences in 64-bit over every element of every parameter.
// `eval` recomputes the scalar loss from the current parameter contents.
// Returns the max relative gradient error; near-zero pairs are compared
// absolutely against 1e-8.
inline double fd_max_rel_error(const std::vector<djrhr::TensorT<double>*>& params,
                               const std::vector<djrhr::TensorT<double>>& analytic,
                               const std::function<double()>& eval, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p]->vec().size(); ++i) {
            double& v = params[p]->vec()[i];
            const double keep = v;
            v = keep + h;
            const double up = eval();
            v = keep - h;
            const double down = eval();
            v = keep;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic[p].vec()[i];
            const double denom = std::max(std::abs(fd), std::abs(an));
            double err;
            if (denom < 1e-6) {
                err = std::abs(fd - an) < 1e-8 ? 0.0 : 1.0;
            } else {
                err = std::abs(fd - an) / denom;
            }
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace testutil
