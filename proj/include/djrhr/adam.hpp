#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "djrhr/tensor.hpp"

namespace djrhr {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled: p *= (1 - lr * wd) after the Adam update
    double lr_decay = 0.95;     // per-epoch multiplier, applied by the caller
};

template <typename T>
class AdamT {
public:
    explicit AdamT(AdamConfig cfg = {}) : cfg_(cfg) {}

    AdamConfig& config() { return cfg_; }
    const AdamConfig& config() const { return cfg_; }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }

    // Moments are created on first use, keyed and ordered by parameter name.
    std::vector<std::pair<std::string, TensorT<T>>>& first_moments() { return m_; }
    std::vector<std::pair<std::string, TensorT<T>>>& second_moments() { return v_; }
    const std::vector<std::pair<std::string, TensorT<T>>>& first_moments() const { return m_; }
    const std::vector<std::pair<std::string, TensorT<T>>>& second_moments() const { return v_; }

    void step(std::vector<std::pair<std::string, TensorT<T>>>& params,
              const std::vector<TensorT<T>>& grads) {
        if (params.size() != grads.size()) {
            throw ShapeError("adam: " + std::to_string(params.size()) + " params vs " +
                             std::to_string(grads.size()) + " grads");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            TensorT<T>& p = params[i].second;
            const TensorT<T>& g = grads[i];
            require_same_dims(p, g, "adam");
            TensorT<T>& m = moment(m_, params[i].first, p);
            TensorT<T>& v = moment(v_, params[i].first, p);
            const T b1 = static_cast<T>(cfg_.beta1);
            const T b2 = static_cast<T>(cfg_.beta2);
            const T decay = static_cast<T>(1.0 - cfg_.lr * cfg_.weight_decay);
            for (std::size_t j = 0; j < p.vec().size(); ++j) {
                const T gj = g.vec()[j];
                m.vec()[j] = b1 * m.vec()[j] + (T(1) - b1) * gj;
                v.vec()[j] = b2 * v.vec()[j] + (T(1) - b2) * gj * gj;
                const double mhat = static_cast<double>(m.vec()[j]) / bc1;
                const double vhat = static_cast<double>(v.vec()[j]) / bc2;
                double pj = static_cast<double>(p.vec()[j]);
                pj -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                p.vec()[j] = static_cast<T>(pj) * decay;
            }
        }
    }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::pair<std::string, TensorT<T>>> m_;
    std::vector<std::pair<std::string, TensorT<T>>> v_;

    static TensorT<T>& moment(std::vector<std::pair<std::string, TensorT<T>>>& store,
                              const std::string& name, const TensorT<T>& like) {
        for (auto& [n, t] : store) {
            if (n == name) {
                require_same_dims(t, like, "adam moment");
                return t;
            }
        }
        store.emplace_back(name, TensorT<T>::zeros_like(like));
        return store.back().second;
    }
};

using Adam = AdamT<float>;

}  // namespace djrhr
