#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "djrhr/tensor.hpp"

namespace djrhr {

// Tape-style reverse-mode autodiff over rank-4 tensors. Nodes are appended in
// creation order, which is already a topological order; backward walks the
// tape strictly in reverse so gradient accumulation order is fixed and results
// are reproducible bit for bit.
template <typename T>
class GraphT {
public:
    using BackwardFn = std::function<void(GraphT&, int)>;

    struct Node {
        TensorT<T> value;
        TensorT<T> grad;  // allocated lazily in backward()
        std::vector<int> inputs;
        BackwardFn backward;
        bool needs_grad = false;
        std::string name;  // set for parameters only
    };

    int input(TensorT<T> v) {
        Node n;
        n.value = std::move(v);
        return push(std::move(n));
    }

    int param(std::string name, TensorT<T> v) {
        Node n;
        n.value = std::move(v);
        n.needs_grad = true;
        n.name = std::move(name);
        return push(std::move(n));
    }

    const TensorT<T>& value(int id) const { return nodes_[id].value; }
    const TensorT<T>& grad(int id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

    // --- primitive ops -----------------------------------------------------

    int conv2d(int x, int w, int b, int stride, int pad) {
        const TensorT<T>& xv = nodes_[x].value;
        const TensorT<T>& wv = nodes_[w].value;
        const TensorT<T>& bv = nodes_[b].value;
        const Dims& xd = xv.dims();
        const Dims& wd = wv.dims();
        if (wd.h != wd.w || wd.h <= 0) {
            throw ShapeError("conv2d: kernel must be square and positive, got " + wd.str());
        }
        if (xd.c != wd.c) {
            throw ShapeError("conv2d: input channels " + xd.str() + " do not match weight " +
                             wd.str());
        }
        if (bv.numel() != wd.n) {
            throw ShapeError("conv2d: bias " + bv.dims().str() + " does not match weight " +
                             wd.str());
        }
        if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
        const std::int64_t k = wd.h;
        const std::int64_t oh = (xd.h + 2 * pad - k) / stride + 1;
        const std::int64_t ow = (xd.w + 2 * pad - k) / stride + 1;
        if (oh < 1 || ow < 1) {
            throw ShapeError("conv2d: kernel " + wd.str() + " larger than padded input " +
                             xd.str());
        }

        Node n;
        n.value = TensorT<T>(xd.n, wd.n, oh, ow);
        conv2d_forward(xv, wv, bv, stride, pad, n.value);
        n.inputs = {x, w, b};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [stride, pad](GraphT& g, int self) { g.conv2d_backward(self, stride, pad); };
        return push(std::move(n));
    }

    int relu(int x) {
        Node n;
        n.value = nodes_[x].value;
        for (T& v : n.value.vec()) {
            if (v < T(0)) v = T(0);
        }
        n.inputs = {x};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            Node& in = g.nodes_[s.inputs[0]];
            if (!in.needs_grad) return;
            const std::size_t m = s.value.vec().size();
            // subgradient at exactly 0 is 0
            for (std::size_t i = 0; i < m; ++i) {
                if (in.value.vec()[i] > T(0)) in.grad.vec()[i] += s.grad.vec()[i];
            }
        };
        return push(std::move(n));
    }

    int concat_channels(const std::vector<int>& parts) {
        if (parts.empty()) throw ShapeError("concat_channels: no parts");
        const Dims& d0 = nodes_[parts[0]].value.dims();
        std::int64_t total_c = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Dims& d = nodes_[parts[i]].value.dims();
            if (d.n != d0.n || d.h != d0.h || d.w != d0.w) {
                throw ShapeError("concat_channels: part " + std::to_string(i) + " has dims " +
                                 d.str() + ", expected spatial/batch of " + d0.str());
            }
            total_c += d.c;
        }
        Node n;
        n.value = TensorT<T>(d0.n, total_c, d0.h, d0.w);
        const std::int64_t plane = d0.h * d0.w;
        for (std::int64_t b = 0; b < d0.n; ++b) {
            std::int64_t c_off = 0;
            for (int p : parts) {
                const TensorT<T>& pv = nodes_[p].value;
                std::copy(pv.plane(b, 0), pv.plane(b, 0) + pv.dims().c * plane,
                          n.value.plane(b, c_off));
                c_off += pv.dims().c;
            }
        }
        n.inputs = parts;
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            const Dims& d = s.value.dims();
            const std::int64_t plane = d.h * d.w;
            for (std::int64_t b = 0; b < d.n; ++b) {
                std::int64_t c_off = 0;
                for (int p : s.inputs) {
                    Node& in = g.nodes_[p];
                    const std::int64_t pc = in.value.dims().c;
                    if (in.needs_grad) {
                        const T* src = s.grad.plane(b, c_off);
                        T* dst = in.grad.plane(b, 0);
                        for (std::int64_t i = 0; i < pc * plane; ++i) dst[i] += src[i];
                    }
                    c_off += pc;
                }
            }
        };
        return push(std::move(n));
    }

    int slice_channels(int x, std::int64_t c0, std::int64_t c1) {
        const Dims& d = nodes_[x].value.dims();
        if (c0 < 0 || c1 > d.c || c0 >= c1) {
            throw ShapeError("slice_channels: range [" + std::to_string(c0) + "," +
                             std::to_string(c1) + ") out of " + d.str());
        }
        Node n;
        n.value = TensorT<T>(d.n, c1 - c0, d.h, d.w);
        const std::int64_t plane = d.h * d.w;
        for (std::int64_t b = 0; b < d.n; ++b) {
            const T* src = nodes_[x].value.plane(b, c0);
            std::copy(src, src + (c1 - c0) * plane, n.value.plane(b, 0));
        }
        n.inputs = {x};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [c0](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            Node& in = g.nodes_[s.inputs[0]];
            if (!in.needs_grad) return;
            const Dims& d = s.value.dims();
            const std::int64_t plane = d.h * d.w;
            for (std::int64_t b = 0; b < d.n; ++b) {
                const T* src = s.grad.plane(b, 0);
                T* dst = in.grad.plane(b, c0);
                for (std::int64_t i = 0; i < d.c * plane; ++i) dst[i] += src[i];
            }
        };
        return push(std::move(n));
    }

    int add(int a, int b) { return binary(a, b, T(1), "add"); }
    int sub(int a, int b) { return binary(a, b, T(-1), "sub"); }

    int scale(int x, T factor) {
        Node n;
        n.value = nodes_[x].value;
        for (T& v : n.value.vec()) v *= factor;
        n.inputs = {x};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [factor](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            Node& in = g.nodes_[s.inputs[0]];
            if (!in.needs_grad) return;
            for (std::size_t i = 0; i < s.grad.vec().size(); ++i) {
                in.grad.vec()[i] += factor * s.grad.vec()[i];
            }
        };
        return push(std::move(n));
    }

    // Sum of squared differences, averaged over the batch dimension.
    // Accumulated in double regardless of T.
    int frobenius_sq(int a, int b) {
        const TensorT<T>& av = nodes_[a].value;
        const TensorT<T>& bv = nodes_[b].value;
        require_same_dims(av, bv, "frobenius_sq");
        double acc = 0.0;
        for (std::size_t i = 0; i < av.vec().size(); ++i) {
            const double d = static_cast<double>(av.vec()[i]) - static_cast<double>(bv.vec()[i]);
            acc += d * d;
        }
        const std::int64_t batch = av.dims().n > 0 ? av.dims().n : 1;
        Node n;
        n.value = TensorT<T>(1, 1, 1, 1, static_cast<T>(acc / static_cast<double>(batch)));
        n.inputs = {a, b};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [batch](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            Node& na = g.nodes_[s.inputs[0]];
            Node& nb = g.nodes_[s.inputs[1]];
            const T up = s.grad.vec()[0];
            const T scale = T(2) * up / static_cast<T>(batch);
            for (std::size_t i = 0; i < na.value.vec().size(); ++i) {
                const T d = na.value.vec()[i] - nb.value.vec()[i];
                if (na.needs_grad) na.grad.vec()[i] += scale * d;
                if (nb.needs_grad) nb.grad.vec()[i] -= scale * d;
            }
        };
        return push(std::move(n));
    }

    // --- backward ----------------------------------------------------------

    void backward(int loss) {
        if (nodes_[loss].value.numel() != 1) {
            throw ShapeError("backward: loss must be scalar, got " +
                             nodes_[loss].value.dims().str());
        }
        for (Node& n : nodes_) {
            if (n.needs_grad) {
                n.grad = TensorT<T>::zeros_like(n.value);
            }
        }
        if (!nodes_[loss].needs_grad) {
            // loss disconnected from every parameter; all gradients stay zero
            return;
        }
        nodes_[loss].grad.vec()[0] = T(1);
        for (int i = loss; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.needs_grad && n.backward) n.backward(*this, i);
        }
    }

private:
    std::vector<Node> nodes_;

    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    bool needs_grad(const std::vector<int>& inputs) const {
        for (int i : inputs) {
            if (nodes_[i].needs_grad) return true;
        }
        return false;
    }

    int binary(int a, int b, T sign_b, const char* what) {
        const TensorT<T>& av = nodes_[a].value;
        const TensorT<T>& bv = nodes_[b].value;
        require_same_dims(av, bv, what);
        Node n;
        n.value = av;
        for (std::size_t i = 0; i < bv.vec().size(); ++i) n.value.vec()[i] += sign_b * bv.vec()[i];
        n.inputs = {a, b};
        n.needs_grad = needs_grad(n.inputs);
        n.backward = [sign_b](GraphT& g, int self) {
            Node& s = g.nodes_[self];
            Node& na = g.nodes_[s.inputs[0]];
            Node& nb = g.nodes_[s.inputs[1]];
            for (std::size_t i = 0; i < s.grad.vec().size(); ++i) {
                if (na.needs_grad) na.grad.vec()[i] += s.grad.vec()[i];
                if (nb.needs_grad) nb.grad.vec()[i] += sign_b * s.grad.vec()[i];
            }
        };
        return push(std::move(n));
    }

    static void conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                               int stride, int pad, TensorT<T>& out) {
        const Dims& xd = x.dims();
        const Dims& od = out.dims();
        const std::int64_t k = w.dims().h;
        for (std::int64_t n = 0; n < od.n; ++n) {
            for (std::int64_t oc = 0; oc < od.c; ++oc) {
                T* op = out.plane(n, oc);
                const T bias = b.vec()[static_cast<std::size_t>(oc)];
                for (std::int64_t i = 0; i < od.h * od.w; ++i) op[i] = bias;
                for (std::int64_t ic = 0; ic < xd.c; ++ic) {
                    const T* ip = x.plane(n, ic);
                    const T* wp = w.plane(oc, ic);
                    for (std::int64_t ky = 0; ky < k; ++ky) {
                        for (std::int64_t kx = 0; kx < k; ++kx) {
                            const T wv = wp[ky * k + kx];
                            if (wv == T(0)) continue;
                            if (stride == 1) {
                                // valid output range for this tap
                                const std::int64_t oy0 = std::max<std::int64_t>(0, pad - ky);
                                const std::int64_t oy1 =
                                    std::min<std::int64_t>(od.h, xd.h + pad - ky);
                                const std::int64_t ox0 = std::max<std::int64_t>(0, pad - kx);
                                const std::int64_t ox1 =
                                    std::min<std::int64_t>(od.w, xd.w + pad - kx);
                                for (std::int64_t oy = oy0; oy < oy1; ++oy) {
                                    const T* row = ip + (oy - pad + ky) * xd.w + (kx - pad);
                                    T* orow = op + oy * od.w;
                                    for (std::int64_t ox = ox0; ox < ox1; ++ox) {
                                        orow[ox] += wv * row[ox];
                                    }
                                }
                            } else {
                                for (std::int64_t oy = 0; oy < od.h; ++oy) {
                                    const std::int64_t iy = oy * stride - pad + ky;
                                    if (iy < 0 || iy >= xd.h) continue;
                                    T* orow = op + oy * od.w;
                                    for (std::int64_t ox = 0; ox < od.w; ++ox) {
                                        const std::int64_t ix = ox * stride - pad + kx;
                                        if (ix < 0 || ix >= xd.w) continue;
                                        orow[ox] += wv * ip[iy * xd.w + ix];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    void conv2d_backward(int self, int stride, int pad) {
        Node& s = nodes_[self];
        Node& nx = nodes_[s.inputs[0]];
        Node& nw = nodes_[s.inputs[1]];
        Node& nb = nodes_[s.inputs[2]];
        const Dims& xd = nx.value.dims();
        const Dims& od = s.value.dims();
        const std::int64_t k = nw.value.dims().h;

        if (nb.needs_grad) {
            for (std::int64_t n = 0; n < od.n; ++n) {
                for (std::int64_t oc = 0; oc < od.c; ++oc) {
                    const T* gp = s.grad.plane(n, oc);
                    T acc = T(0);
                    for (std::int64_t i = 0; i < od.h * od.w; ++i) acc += gp[i];
                    nb.grad.vec()[static_cast<std::size_t>(oc)] += acc;
                }
            }
        }
        for (std::int64_t n = 0; n < od.n; ++n) {
            for (std::int64_t oc = 0; oc < od.c; ++oc) {
                const T* gp = s.grad.plane(n, oc);
                for (std::int64_t ic = 0; ic < xd.c; ++ic) {
                    const T* ip = nx.value.plane(n, ic);
                    T* gip = nx.needs_grad ? nx.grad.plane(n, ic) : nullptr;
                    const T* wp = nw.value.plane(oc, ic);
                    T* gwp = nw.needs_grad ? nw.grad.plane(oc, ic) : nullptr;
                    for (std::int64_t ky = 0; ky < k; ++ky) {
                        for (std::int64_t kx = 0; kx < k; ++kx) {
                            const T wv = wp[ky * k + kx];
                            if (stride == 1) {
                                const std::int64_t oy0 = std::max<std::int64_t>(0, pad - ky);
                                const std::int64_t oy1 =
                                    std::min<std::int64_t>(od.h, xd.h + pad - ky);
                                const std::int64_t ox0 = std::max<std::int64_t>(0, pad - kx);
                                const std::int64_t ox1 =
                                    std::min<std::int64_t>(od.w, xd.w + pad - kx);
                                T wacc = T(0);
                                for (std::int64_t oy = oy0; oy < oy1; ++oy) {
                                    const std::int64_t base = (oy - pad + ky) * xd.w + (kx - pad);
                                    const T* grow = gp + oy * od.w;
                                    if (gwp) {
                                        const T* row = ip + base;
                                        for (std::int64_t ox = ox0; ox < ox1; ++ox) {
                                            wacc += grow[ox] * row[ox];
                                        }
                                    }
                                    if (gip) {
                                        T* grow_in = gip + base;
                                        for (std::int64_t ox = ox0; ox < ox1; ++ox) {
                                            grow_in[ox] += wv * grow[ox];
                                        }
                                    }
                                }
                                if (gwp) gwp[ky * k + kx] += wacc;
                            } else {
                                T wacc = T(0);
                                for (std::int64_t oy = 0; oy < od.h; ++oy) {
                                    const std::int64_t iy = oy * stride - pad + ky;
                                    if (iy < 0 || iy >= xd.h) continue;
                                    const T* grow = gp + oy * od.w;
                                    for (std::int64_t ox = 0; ox < od.w; ++ox) {
                                        const std::int64_t ix = ox * stride - pad + kx;
                                        if (ix < 0 || ix >= xd.w) continue;
                                        wacc += grow[ox] * ip[iy * xd.w + ix];
                                        if (gip) gip[iy * xd.w + ix] += wv * grow[ox];
                                    }
                                }
                                if (gwp) gwp[ky * k + kx] += wacc;
                            }
                        }
                    }
                }
            }
        }
    }
};

using Graph = GraphT<float>;

}  // namespace djrhr
