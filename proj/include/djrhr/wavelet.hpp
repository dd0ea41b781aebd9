#pragma once

#include "djrhr/tensor.hpp"

namespace djrhr {

// Four half-resolution subbands of one image, per channel.
template <typename T>
struct WaveletPackT {
    TensorT<T> ll, lh, hl, hh;
    std::int64_t src_h = 0, src_w = 0;
};

using WaveletPack = WaveletPackT<float>;

// Single-level orthonormal Haar analysis. For each disjoint 2x2 block
// [[a,b],[c,d]]: LL=(a+b+c+d)/2, HL=(a-b+c-d)/2, LH=(a+b-c-d)/2,
// HH=(a-b-c+d)/2. Rejects odd sizes; the caller pads.
template <typename T>
WaveletPackT<T> dwt2_haar(const TensorT<T>& img) {
    const Dims& d = img.dims();
    if (d.h % 2 != 0 || d.w % 2 != 0) {
        throw ShapeError("dwt2_haar: dims " + d.str() +
                         " have odd height or width; pad to even first");
    }
    const std::int64_t h2 = d.h / 2, w2 = d.w / 2;
    WaveletPackT<T> p;
    p.src_h = d.h;
    p.src_w = d.w;
    p.ll = TensorT<T>(d.n, d.c, h2, w2);
    p.lh = TensorT<T>(d.n, d.c, h2, w2);
    p.hl = TensorT<T>(d.n, d.c, h2, w2);
    p.hh = TensorT<T>(d.n, d.c, h2, w2);
    const T half = T(0.5);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const T* src = img.plane(n, c);
            T* ll = p.ll.plane(n, c);
            T* lh = p.lh.plane(n, c);
            T* hl = p.hl.plane(n, c);
            T* hh = p.hh.plane(n, c);
            for (std::int64_t y = 0; y < h2; ++y) {
                const T* r0 = src + (2 * y) * d.w;
                const T* r1 = src + (2 * y + 1) * d.w;
                for (std::int64_t x = 0; x < w2; ++x) {
                    const T a = r0[2 * x], b = r0[2 * x + 1];
                    const T cc = r1[2 * x], dd = r1[2 * x + 1];
                    ll[y * w2 + x] = (a + b + cc + dd) * half;
                    hl[y * w2 + x] = (a - b + cc - dd) * half;
                    lh[y * w2 + x] = (a + b - cc - dd) * half;
                    hh[y * w2 + x] = (a - b - cc + dd) * half;
                }
            }
        }
    }
    return p;
}

template <typename T>
TensorT<T> idwt2_haar(const WaveletPackT<T>& p) {
    const Dims& d = p.ll.dims();
    if (!(p.lh.dims() == d) || !(p.hl.dims() == d) || !(p.hh.dims() == d)) {
        throw ShapeError("idwt2_haar: subband dims differ: LL " + d.str() + ", LH " +
                         p.lh.dims().str() + ", HL " + p.hl.dims().str() + ", HH " +
                         p.hh.dims().str());
    }
    TensorT<T> out(d.n, d.c, d.h * 2, d.w * 2);
    const std::int64_t w = d.w * 2;
    const T half = T(0.5);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const T* ll = p.ll.plane(n, c);
            const T* lh = p.lh.plane(n, c);
            const T* hl = p.hl.plane(n, c);
            const T* hh = p.hh.plane(n, c);
            T* dst = out.plane(n, c);
            for (std::int64_t y = 0; y < d.h; ++y) {
                T* r0 = dst + (2 * y) * w;
                T* r1 = dst + (2 * y + 1) * w;
                for (std::int64_t x = 0; x < d.w; ++x) {
                    const T L = ll[y * d.w + x], V = lh[y * d.w + x];
                    const T H = hl[y * d.w + x], D = hh[y * d.w + x];
                    r0[2 * x] = (L + H + V + D) * half;
                    r0[2 * x + 1] = (L - H + V - D) * half;
                    r1[2 * x] = (L + H - V - D) * half;
                    r1[2 * x + 1] = (L - H - V + D) * half;
                }
            }
        }
    }
    return out;
}

}  // namespace djrhr
