#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "djrhr/features.hpp"
#include "djrhr/graph.hpp"
#include "djrhr/tensor.hpp"

namespace djrhr {

enum class ModelKind { srr, djrhr };

inline const char* model_name(ModelKind k) { return k == ModelKind::srr ? "srr" : "djrhr"; }

struct SrrSpec {
    int depth = 20;  // conv layers; ReLU after all but the last
    int width = 64;
    static constexpr int channels = 12;
};

struct DjrhrSpec {
    int blocks = 3;            // L
    int growth = 12;           // K
    int layers_per_block = 4;
    int trunk = 16;            // stem / transition output width
    static constexpr int channels = 13;
};

struct LossWeights {
    double alpha = 0.5;
};

// Residual body f(X). The residual add happens in the loss and inference
// paths, so the same graph serves both.
template <typename T>
class NetworkT {
public:
    ModelKind kind = ModelKind::srr;
    SrrSpec srr;
    DjrhrSpec djrhr;
    std::vector<std::pair<std::string, TensorT<T>>> params;

    static NetworkT build_srr(const SrrSpec& spec, std::uint64_t seed) {
        if (spec.depth < 2) throw ValueError("build_srr: depth must be >= 2");
        if (spec.width < 1) throw ValueError("build_srr: width must be >= 1");
        NetworkT net;
        net.kind = ModelKind::srr;
        net.srr = spec;
        std::mt19937_64 rng(seed);
        for (int l = 0; l < spec.depth; ++l) {
            const int in_c = (l == 0) ? SrrSpec::channels : spec.width;
            const int out_c = (l == spec.depth - 1) ? SrrSpec::channels : spec.width;
            const bool last = (l == spec.depth - 1);
            net.add_conv("srr.conv" + std::to_string(l), out_c, in_c, 3, last, rng);
        }
        return net;
    }

    static NetworkT build_djrhr(const DjrhrSpec& spec, std::uint64_t seed) {
        if (spec.blocks < 1) throw ValueError("build_djrhr: block count must be >= 1");
        if (spec.growth < 1) throw ValueError("build_djrhr: growth rate must be >= 1");
        if (spec.layers_per_block < 1 || spec.trunk < 1) {
            throw ValueError("build_djrhr: layers_per_block and trunk must be >= 1");
        }
        NetworkT net;
        net.kind = ModelKind::djrhr;
        net.djrhr = spec;
        std::mt19937_64 rng(seed);
        net.add_conv("djrhr.stem", spec.trunk, DjrhrSpec::channels, 3, false, rng);
        int c = spec.trunk;
        for (int b = 0; b < spec.blocks; ++b) {
            for (int l = 0; l < spec.layers_per_block; ++l) {
                net.add_conv("djrhr.block" + std::to_string(b) + ".layer" + std::to_string(l),
                             spec.growth, c, 3, false, rng);
                c += spec.growth;
            }
            if (b + 1 < spec.blocks) {
                net.add_conv("djrhr.trans" + std::to_string(b), spec.trunk, c, 1, false, rng);
                c = spec.trunk;
            }
        }
        net.add_conv("djrhr.head", DjrhrSpec::channels, c, 1, true, rng);
        return net;
    }

    int in_channels() const {
        return kind == ModelKind::srr ? SrrSpec::channels : DjrhrSpec::channels;
    }

    std::int64_t param_count() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : params) n += t.numel();
        return n;
    }

    // Builds f(x) on the tape. Registers every parameter as a graph node;
    // param_nodes (when given) receives the node ids aligned with `params`.
    int forward(GraphT<T>& g, int x, std::vector<int>* param_nodes = nullptr) const {
        std::vector<int> nodes;
        nodes.reserve(params.size());
        std::size_t next = 0;
        auto conv = [&](int in, int pad) {
            const int w = g.param(params[next].first, params[next].second);
            nodes.push_back(w);
            ++next;
            const int b = g.param(params[next].first, params[next].second);
            nodes.push_back(b);
            ++next;
            return g.conv2d(in, w, b, 1, pad);
        };
        int out;
        if (kind == ModelKind::srr) {
            int cur = x;
            for (int l = 0; l < srr.depth; ++l) {
                cur = conv(cur, 1);
                if (l + 1 < srr.depth) cur = g.relu(cur);
            }
            out = cur;
        } else {
            int cur = conv(x, 1);  // stem sees the raw signed subbands
            for (int b = 0; b < djrhr.blocks; ++b) {
                for (int l = 0; l < djrhr.layers_per_block; ++l) {
                    const int t = conv(g.relu(cur), 1);
                    cur = g.concat_channels({cur, t});
                }
                if (b + 1 < djrhr.blocks) {
                    cur = conv(g.relu(cur), 0);  // 1x1 transition
                }
            }
            out = conv(g.relu(cur), 0);  // zero-initialized head
        }
        if (param_nodes) *param_nodes = std::move(nodes);
        return out;
    }

private:
    void add_conv(const std::string& name, int out_c, int in_c, int k, bool zero_init,
                  std::mt19937_64& rng) {
        TensorT<T> w(out_c, in_c, k, k);
        if (!zero_init) {
            const double bound = std::sqrt(6.0 / (static_cast<double>(in_c) * k * k));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (T& v : w.vec()) v = static_cast<T>(dist(rng));
        }
        params.emplace_back(name + ".weight", std::move(w));
        params.emplace_back(name + ".bias", TensorT<T>(1, out_c, 1, 1));
    }
};

using Network = NetworkT<float>;

// (1/N) sum_i || Y_i - X_i - f(X_i) ||_F^2 ; the weight penalty is applied as
// decoupled weight decay in the optimizer.
template <typename T>
int srr_loss(GraphT<T>& g, const NetworkT<T>& net, int x, int y,
             std::vector<int>* param_nodes = nullptr) {
    const int fx = net.forward(g, x, param_nodes);
    return g.frobenius_sq(y, g.add(x, fx));
}

template <typename T>
struct JointLossNodes {
    int total = -1, l1 = -1, l2 = -1;
};

// L1 over the 12 subband channels, L2 over the dark channel, total = L1 + a*L2.
template <typename T>
JointLossNodes<T> djrhr_loss(GraphT<T>& g, const NetworkT<T>& net, int x, int y,
                             const LossWeights& w, std::vector<int>* param_nodes = nullptr) {
    if (w.alpha < 0) throw ValueError("djrhr_loss: alpha must be >= 0");
    const int fx = net.forward(g, x, param_nodes);
    const int yhat = g.add(x, fx);
    JointLossNodes<T> out;
    out.l1 = g.frobenius_sq(g.slice_channels(y, 0, 12), g.slice_channels(yhat, 0, 12));
    out.l2 = g.frobenius_sq(g.slice_channels(y, 12, 13), g.slice_channels(yhat, 12, 13));
    out.total = g.add(out.l1, g.scale(out.l2, static_cast<T>(w.alpha)));
    return out;
}

// pack -> residual forward -> unpack; output dims match the input, including
// odd sizes via pad/crop.
template <typename T>
TensorT<T> infer(const NetworkT<T>& net, const TensorT<T>& rgb) {
    FeaturePackT<T> fp =
        (net.kind == ModelKind::srr) ? pack_srr(rgb) : pack_djrhr(rgb);
    GraphT<T> g;
    const int x = g.input(fp.channels);
    const int fx = net.forward(g, x);
    const int yhat = g.add(x, fx);
    FeaturePackT<T> out;
    out.channels = g.value(yhat);
    out.orig_h = fp.orig_h;
    out.orig_w = fp.orig_w;
    out.has_dark = fp.has_dark;
    return unpack_to_image(out);
}

}  // namespace djrhr
