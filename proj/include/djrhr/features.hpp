#pragma once

#include <algorithm>

#include "djrhr/tensor.hpp"
#include "djrhr/wavelet.hpp"

namespace djrhr {

// Network-facing feature tensor: 12 subband channels ordered
// LL-R,G,B / LH-R,G,B / HL-R,G,B / HH-R,G,B, optionally followed by one
// half-resolution dark channel.
template <typename T>
struct FeaturePackT {
    TensorT<T> channels;  // (n, 12 or 13, h/2, w/2)
    std::int64_t orig_h = 0, orig_w = 0;
    bool has_dark = false;
};

using FeaturePack = FeaturePackT<float>;

// Reflect-pad (mirror about the edge row/column, edge excluded) to even H and W.
template <typename T>
TensorT<T> reflect_pad_to_even(const TensorT<T>& img) {
    const Dims& d = img.dims();
    const std::int64_t ph = d.h % 2, pw = d.w % 2;
    if (ph == 0 && pw == 0) return img;
    if ((ph && d.h < 2) || (pw && d.w < 2)) {
        throw ShapeError("reflect_pad_to_even: cannot reflect-pad dims " + d.str());
    }
    TensorT<T> out(d.n, d.c, d.h + ph, d.w + pw);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const T* src = img.plane(n, c);
            T* dst = out.plane(n, c);
            const std::int64_t ow = d.w + pw;
            for (std::int64_t y = 0; y < d.h + ph; ++y) {
                const std::int64_t sy = (y < d.h) ? y : d.h - 2;
                for (std::int64_t x = 0; x < ow; ++x) {
                    const std::int64_t sx = (x < d.w) ? x : d.w - 2;
                    dst[y * ow + x] = src[sy * d.w + sx];
                }
            }
        }
    }
    return out;
}

template <typename T>
TensorT<T> crop(const TensorT<T>& img, std::int64_t h, std::int64_t w) {
    const Dims& d = img.dims();
    if (h > d.h || w > d.w) {
        throw ShapeError("crop: target " + std::to_string(h) + "x" + std::to_string(w) +
                         " exceeds " + d.str());
    }
    if (h == d.h && w == d.w) return img;
    TensorT<T> out(d.n, d.c, h, w);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const T* src = img.plane(n, c);
            T* dst = out.plane(n, c);
            for (std::int64_t y = 0; y < h; ++y) {
                std::copy(src + y * d.w, src + y * d.w + w, dst + y * w);
            }
        }
    }
    return out;
}

template <typename T>
TensorT<T> avg_pool2(const TensorT<T>& img) {
    const Dims& d = img.dims();
    if (d.h % 2 != 0 || d.w % 2 != 0) {
        throw ShapeError("avg_pool2: dims " + d.str() + " must be even");
    }
    TensorT<T> out(d.n, d.c, d.h / 2, d.w / 2);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const T* src = img.plane(n, c);
            T* dst = out.plane(n, c);
            const std::int64_t w2 = d.w / 2;
            for (std::int64_t y = 0; y < d.h / 2; ++y) {
                for (std::int64_t x = 0; x < w2; ++x) {
                    dst[y * w2 + x] = (src[(2 * y) * d.w + 2 * x] + src[(2 * y) * d.w + 2 * x + 1] +
                                       src[(2 * y + 1) * d.w + 2 * x] +
                                       src[(2 * y + 1) * d.w + 2 * x + 1]) *
                                      T(0.25);
                }
            }
        }
    }
    return out;
}

// Per-pixel min over the three color planes; radius > 0 additionally takes the
// min over a (2r+1)^2 window with edge clamping.
template <typename T>
TensorT<T> dark_channel(const TensorT<T>& img, int radius = 0) {
    const Dims& d = img.dims();
    if (d.c != 3) {
        throw ShapeError("dark_channel: expected 3 channels, got " + d.str());
    }
    TensorT<T> mins(d.n, 1, d.h, d.w);
    for (std::int64_t n = 0; n < d.n; ++n) {
        const T* r = img.plane(n, 0);
        const T* g = img.plane(n, 1);
        const T* b = img.plane(n, 2);
        T* dst = mins.plane(n, 0);
        for (std::int64_t i = 0; i < d.h * d.w; ++i) {
            dst[i] = std::min(r[i], std::min(g[i], b[i]));
        }
    }
    if (radius <= 0) return mins;
    TensorT<T> out(d.n, 1, d.h, d.w);
    for (std::int64_t n = 0; n < d.n; ++n) {
        const T* src = mins.plane(n, 0);
        T* dst = out.plane(n, 0);
        for (std::int64_t y = 0; y < d.h; ++y) {
            for (std::int64_t x = 0; x < d.w; ++x) {
                T m = src[y * d.w + x];
                for (std::int64_t dy = -radius; dy <= radius; ++dy) {
                    const std::int64_t yy = std::clamp<std::int64_t>(y + dy, 0, d.h - 1);
                    for (std::int64_t dx = -radius; dx <= radius; ++dx) {
                        const std::int64_t xx = std::clamp<std::int64_t>(x + dx, 0, d.w - 1);
                        m = std::min(m, src[yy * d.w + xx]);
                    }
                }
                dst[y * d.w + x] = m;
            }
        }
    }
    return out;
}

namespace detail {

template <typename T>
TensorT<T> concat4(const WaveletPackT<T>& wp) {
    const Dims& d = wp.ll.dims();
    TensorT<T> out(d.n, 4 * d.c, d.h, d.w);
    const std::int64_t plane = d.h * d.w;
    const TensorT<T>* bands[4] = {&wp.ll, &wp.lh, &wp.hl, &wp.hh};
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (int b = 0; b < 4; ++b) {
            for (std::int64_t c = 0; c < d.c; ++c) {
                std::copy(bands[b]->plane(n, c), bands[b]->plane(n, c) + plane,
                          out.plane(n, b * d.c + c));
            }
        }
    }
    return out;
}

template <typename T>
void validate_rgb(const TensorT<T>& img, const char* what) {
    if (img.dims().c != 3) {
        throw ShapeError(std::string(what) + ": expected a 3-channel image, got " +
                         img.dims().str());
    }
}

}  // namespace detail

template <typename T>
FeaturePackT<T> pack_srr(const TensorT<T>& img) {
    detail::validate_rgb(img, "pack_srr");
    FeaturePackT<T> fp;
    fp.orig_h = img.dims().h;
    fp.orig_w = img.dims().w;
    fp.channels = detail::concat4(dwt2_haar(reflect_pad_to_even(img)));
    return fp;
}

template <typename T>
FeaturePackT<T> pack_djrhr(const TensorT<T>& img) {
    detail::validate_rgb(img, "pack_djrhr");
    const TensorT<T> padded = reflect_pad_to_even(img);
    FeaturePackT<T> fp;
    fp.orig_h = img.dims().h;
    fp.orig_w = img.dims().w;
    const TensorT<T> subbands = detail::concat4(dwt2_haar(padded));
    // dark channel computed at subband resolution from the 2x2-mean image
    const TensorT<T> dark = dark_channel(avg_pool2(padded), 0);
    const Dims& d = subbands.dims();
    fp.channels = TensorT<T>(d.n, 13, d.h, d.w);
    const std::int64_t plane = d.h * d.w;
    for (std::int64_t n = 0; n < d.n; ++n) {
        std::copy(subbands.plane(n, 0), subbands.plane(n, 0) + 12 * plane,
                  fp.channels.plane(n, 0));
        std::copy(dark.plane(n, 0), dark.plane(n, 0) + plane, fp.channels.plane(n, 12));
    }
    fp.has_dark = true;
    return fp;
}

// Reconstructs the image from the 12 subband channels; a 13th channel, when
// present, is discarded. Crops to the recorded source size and clamps to [0,1].
template <typename T>
TensorT<T> unpack_to_image(const FeaturePackT<T>& fp) {
    if (fp.orig_h <= 0 || fp.orig_w <= 0) {
        throw ValueError("unpack_to_image: pack has no recorded source size");
    }
    const Dims& d = fp.channels.dims();
    if (d.c != 12 && d.c != 13) {
        throw ShapeError("unpack_to_image: expected 12 or 13 channels, got " + d.str());
    }
    WaveletPackT<T> wp;
    wp.ll = TensorT<T>(d.n, 3, d.h, d.w);
    wp.lh = TensorT<T>(d.n, 3, d.h, d.w);
    wp.hl = TensorT<T>(d.n, 3, d.h, d.w);
    wp.hh = TensorT<T>(d.n, 3, d.h, d.w);
    TensorT<T>* bands[4] = {&wp.ll, &wp.lh, &wp.hl, &wp.hh};
    const std::int64_t plane = d.h * d.w;
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (int b = 0; b < 4; ++b) {
            for (std::int64_t c = 0; c < 3; ++c) {
                std::copy(fp.channels.plane(n, b * 3 + c), fp.channels.plane(n, b * 3 + c) + plane,
                          bands[b]->plane(n, c));
            }
        }
    }
    TensorT<T> img = crop(idwt2_haar(wp), fp.orig_h, fp.orig_w);
    for (T& v : img.vec()) v = std::clamp(v, T(0), T(1));
    return img;
}

}  // namespace djrhr
