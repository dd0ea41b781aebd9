#include "djrhr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "djrhr/image_io.hpp"
#include "json.hpp"

namespace djrhr {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<RainParams> rain_presets() {
    std::vector<RainParams> presets;
    for (double angle : {-15.0, -5.0, 5.0, 15.0}) {
        for (int length : {9, 15, 21}) {
            RainParams p;
            p.angle_deg = angle;
            p.length = length;
            presets.push_back(p);
        }
    }
    return presets;
}

Tensor generate_rain_layer(std::int64_t h, std::int64_t w, const RainParams& params,
                           int layer_index) {
    if (params.length < 1) throw ValueError("generate_rain_layer: length must be >= 1");
    if (params.density < 0) throw ValueError("generate_rain_layer: density must be >= 0");
    Tensor layer(1, 1, h, w);
    if (params.density == 0.0) return layer;

    std::mt19937_64 rng(params.seed * 0x9e3779b97f4a7c15ULL + 0x100 + layer_index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double p_seed = params.density / 1000.0;
    const double rad = params.angle_deg * std::acos(-1.0) / 180.0;
    const double dx = std::sin(rad);
    const double dy = std::cos(rad);  // angle measured from vertical, falling down
    float* dst = layer.plane(0, 0);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const double u = unit(rng);
            const double strength = unit(rng);  // drawn unconditionally for determinism
            if (u >= p_seed) continue;
            // streak of constant brightness smeared along the fall direction;
            // overlapping streaks compose by max so values stay in [0,1]
            const auto amp = static_cast<float>(params.intensity * (0.5 + 0.5 * strength));
            for (int t = 0; t < params.length; ++t) {
                const double off = t - (params.length - 1) / 2.0;
                const auto yy = static_cast<std::int64_t>(std::lround(y + off * dy));
                const auto xx = static_cast<std::int64_t>(std::lround(x + off * dx));
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                dst[yy * w + xx] = std::max(dst[yy * w + xx], amp);
            }
        }
    }
    return layer;
}

Tensor apply_rain(const Tensor& background, const std::vector<Tensor>& layers) {
    const Dims& d = background.dims();
    Tensor out = background;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const Dims& ld = layers[li].dims();
        if (ld.n != d.n || ld.h != d.h || ld.w != d.w || ld.c != 1) {
            throw ShapeError("apply_rain: layer " + std::to_string(li) + " dims " + ld.str() +
                             " do not match background " + d.str());
        }
        for (std::int64_t n = 0; n < d.n; ++n) {
            const float* lp = layers[li].plane(n, 0);
            for (std::int64_t c = 0; c < d.c; ++c) {
                float* op = out.plane(n, c);
                for (std::int64_t i = 0; i < d.h * d.w; ++i) op[i] += lp[i];
            }
        }
    }
    if (!layers.empty()) {
        for (float& v : out.vec()) v = std::clamp(v, 0.0f, 1.0f);
    }
    return out;
}

Tensor apply_haze(const Tensor& input, const Tensor& depth, double airlight, double beta) {
    if (beta < 0) throw ValueError("apply_haze: beta must be >= 0");
    const Dims& d = input.dims();
    const Dims& dd = depth.dims();
    if (dd.n != d.n || dd.h != d.h || dd.w != d.w || dd.c != 1) {
        throw ShapeError("apply_haze: depth dims " + dd.str() + " do not match image " + d.str());
    }
    if (beta == 0.0) return input;  // t = 1 exactly
    Tensor out(d);
    const float a = static_cast<float>(airlight);
    for (std::int64_t n = 0; n < d.n; ++n) {
        const float* dp = depth.plane(n, 0);
        for (std::int64_t c = 0; c < d.c; ++c) {
            const float* ip = input.plane(n, c);
            float* op = out.plane(n, c);
            for (std::int64_t i = 0; i < d.h * d.w; ++i) {
                const float t = std::exp(static_cast<float>(-beta) * dp[i]);
                op[i] = t * ip[i] + (1.0f - t) * a;
            }
        }
    }
    return out;
}

namespace {

// Seeded lattice value noise with bilinear interpolation.
double value_noise(std::int64_t y, std::int64_t x, double cell, std::uint64_t seed) {
    auto lattice = [seed](std::int64_t gy, std::int64_t gx) {
        std::uint64_t v = seed;
        v ^= static_cast<std::uint64_t>(gy) * 0x9e3779b97f4a7c15ULL;
        v ^= static_cast<std::uint64_t>(gx) * 0xc2b2ae3d27d4eb4fULL;
        v *= 0xff51afd7ed558ccdULL;
        v ^= v >> 33;
        return static_cast<double>(v % 100000) / 100000.0;
    };
    const double fy = y / cell, fx = x / cell;
    const auto y0 = static_cast<std::int64_t>(std::floor(fy));
    const auto x0 = static_cast<std::int64_t>(std::floor(fx));
    const double ty = fy - y0, tx = fx - x0;
    const double sy = ty * ty * (3 - 2 * ty);
    const double sx = tx * tx * (3 - 2 * tx);
    const double v00 = lattice(y0, x0), v01 = lattice(y0, x0 + 1);
    const double v10 = lattice(y0 + 1, x0), v11 = lattice(y0 + 1, x0 + 1);
    return (v00 * (1 - sx) + v01 * sx) * (1 - sy) + (v10 * (1 - sx) + v11 * sx) * sy;
}

double fractal_noise(std::int64_t y, std::int64_t x, std::uint64_t seed) {
    double acc = 0.0, amp = 1.0, total = 0.0, cell = 32.0;
    for (int octave = 0; octave < 4; ++octave) {
        acc += amp * value_noise(y, x, cell, seed + octave);
        total += amp;
        amp *= 0.5;
        cell *= 0.5;
    }
    return acc / total;
}

}  // namespace

Tensor generate_depth(std::int64_t h, std::int64_t w, DepthMode mode, std::uint64_t seed,
                      double value) {
    Tensor depth(1, 1, h, w);
    float* dp = depth.plane(0, 0);
    switch (mode) {
        case DepthMode::constant:
            for (std::int64_t i = 0; i < h * w; ++i) dp[i] = static_cast<float>(value);
            break;
        case DepthMode::ramp:
            for (std::int64_t y = 0; y < h; ++y) {
                const float d = static_cast<float>(y + 1) / static_cast<float>(h);
                for (std::int64_t x = 0; x < w; ++x) dp[y * w + x] = d;
            }
            break;
        case DepthMode::fractal:
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    dp[y * w + x] = static_cast<float>(0.05 + fractal_noise(y, x, seed));
                }
            }
            break;
    }
    return depth;
}

Tensor generate_clean_image(std::int64_t h, std::int64_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor img(1, 3, h, w);
    // smooth colored base
    for (std::int64_t c = 0; c < 3; ++c) {
        float* p = img.plane(0, c);
        const std::uint64_t ns = seed * 31 + static_cast<std::uint64_t>(c) + 1;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                p[y * w + x] = static_cast<float>(0.15 + 0.6 * fractal_noise(y, x, ns));
            }
        }
    }
    // a few flat rectangles with crisp edges
    const int shapes = 4 + static_cast<int>(unit(rng) * 5);
    for (int s = 0; s < shapes; ++s) {
        const auto y0 = static_cast<std::int64_t>(unit(rng) * h);
        const auto x0 = static_cast<std::int64_t>(unit(rng) * w);
        const auto hh = static_cast<std::int64_t>(unit(rng) * h / 2) + 4;
        const auto ww = static_cast<std::int64_t>(unit(rng) * w / 2) + 4;
        float col[3] = {static_cast<float>(unit(rng)), static_cast<float>(unit(rng)),
                        static_cast<float>(unit(rng))};
        for (std::int64_t c = 0; c < 3; ++c) {
            float* p = img.plane(0, c);
            for (std::int64_t y = y0; y < std::min(h, y0 + hh); ++y) {
                for (std::int64_t x = x0; x < std::min(w, x0 + ww); ++x) {
                    p[y * w + x] = 0.3f * p[y * w + x] + 0.7f * col[c];
                }
            }
        }
    }
    for (float& v : img.vec()) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

namespace {

json rain_params_json(const RainParams& p) {
    return {{"angle_deg", p.angle_deg}, {"length", p.length},   {"density", p.density},
            {"intensity", p.intensity}, {"layers", p.layers},   {"seed", p.seed}};
}

const char* depth_mode_name(DepthMode m) {
    switch (m) {
        case DepthMode::ramp: return "ramp";
        case DepthMode::fractal: return "fractal";
        case DepthMode::constant: return "constant";
    }
    return "?";
}

json haze_params_json(const HazeParams& p) {
    return {{"airlight", p.airlight},
            {"beta", p.beta},
            {"depth_mode", depth_mode_name(p.depth_mode)},
            {"depth_seed", p.depth_seed}};
}

}  // namespace

std::string make_dataset(const SynthOptions& opts) {
    if (opts.mode != "rain" && opts.mode != "rain_haze") {
        throw ValueError("make_dataset: mode must be 'rain' or 'rain_haze', got '" + opts.mode +
                         "'");
    }
    std::vector<std::string> sources;
    if (!opts.hq_dir.empty()) {
        if (!fs::is_directory(opts.hq_dir)) {
            throw IoError("make_dataset: source directory not found: " + opts.hq_dir);
        }
        for (const auto& e : fs::directory_iterator(opts.hq_dir)) {
            if (e.path().extension() == ".png") sources.push_back(e.path().string());
        }
        std::sort(sources.begin(), sources.end());
        if (sources.empty()) {
            throw IoError("make_dataset: no .png images in " + opts.hq_dir);
        }
    }
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (!fs::is_directory(opts.out_dir)) {
        throw IoError("make_dataset: cannot create output directory " + opts.out_dir);
    }

    const std::vector<RainParams> presets = rain_presets();
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::string manifest;
    for (int i = 0; i < opts.count; ++i) {
        Tensor hq = sources.empty()
                        ? generate_clean_image(opts.image_h, opts.image_w, opts.seed * 1000 + i)
                        : read_png_rgb(sources[static_cast<std::size_t>(i) % sources.size()]);

        RainParams rain = presets[static_cast<std::size_t>(rng() % presets.size())];
        rain.density = opts.density;
        rain.intensity = opts.intensity * (0.7 + 0.3 * unit(rng));
        rain.seed = opts.seed * 10007 + static_cast<std::uint64_t>(i);

        std::vector<Tensor> layers;
        for (int l = 0; l < rain.layers; ++l) {
            layers.push_back(generate_rain_layer(hq.dims().h, hq.dims().w, rain, l));
        }
        Tensor lq = apply_rain(hq, layers);

        HazeParams haze;
        const bool with_haze = opts.mode == "rain_haze";
        if (with_haze) {
            haze.airlight = 0.6 + 0.4 * unit(rng);
            haze.beta = 0.4 + 0.8 * unit(rng);
            haze.depth_mode = DepthMode::fractal;
            haze.depth_seed = opts.seed * 20011 + static_cast<std::uint64_t>(i);
            const Tensor depth =
                generate_depth(hq.dims().h, hq.dims().w, haze.depth_mode, haze.depth_seed);
            lq = apply_haze(lq, depth, haze.airlight, haze.beta);
        } else {
            // rain-only mode still consumes the haze draws so both modes walk
            // the RNG identically per sample
            (void)unit(rng);
            (void)unit(rng);
        }

        char name[32];
        std::snprintf(name, sizeof(name), "%04d", i);
        const std::string hq_path = (fs::path(opts.out_dir) / ("hq_" + std::string(name) + ".png")).string();
        const std::string lq_path = (fs::path(opts.out_dir) / ("lq_" + std::string(name) + ".png")).string();
        write_png_rgb(hq_path, hq);
        write_png_rgb(lq_path, lq);

        json row;
        row["hq_path"] = hq_path;
        row["lq_path"] = lq_path;
        row["mode"] = opts.mode;
        row["seed"] = opts.seed;
        row["rain_params"] = rain_params_json(rain);
        row["haze_params"] = with_haze ? haze_params_json(haze) : json(nullptr);
        manifest += row.dump() + "\n";
    }

    const std::string manifest_path = (fs::path(opts.out_dir) / "manifest.jsonl").string();
    std::ofstream os(manifest_path, std::ios::trunc);
    if (!os) throw IoError("make_dataset: cannot write " + manifest_path);
    os << manifest;
    return manifest_path;
}

}  // namespace djrhr
