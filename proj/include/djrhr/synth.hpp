#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "djrhr/tensor.hpp"

namespace djrhr {

struct RainParams {
    double angle_deg = 0.0;     // from vertical, in [-20, 20]
    int length = 15;            // streak length in pixels
    double density = 1.0;       // expected streak seeds per kilopixel
    double intensity = 0.5;     // in (0, 1]
    int layers = 2;
    std::uint64_t seed = 0;
};

// 12 preset streak configurations: 4 angles x 3 lengths.
std::vector<RainParams> rain_presets();

enum class DepthMode { ramp, fractal, constant };

struct HazeParams {
    double airlight = 0.8;      // gray A, replicated per channel, in [0.6, 1.0]
    double beta = 0.5;          // scattering coefficient, >= 0
    DepthMode depth_mode = DepthMode::fractal;
    std::uint64_t depth_seed = 0;
    double depth_value = 1.0;   // constant mode
};

// Sparse nonnegative streak map: seeded uniform noise, thresholded by density,
// smeared along the streak direction, scaled by intensity. Values in [0,1].
Tensor generate_rain_layer(std::int64_t h, std::int64_t w, const RainParams& params,
                           int layer_index);

// O = clamp(B + sum of layers, 0, 1); streaks are achromatic.
Tensor apply_rain(const Tensor& background, const std::vector<Tensor>& layers);

// O(x) = t(x)*input(x) + (1-t(x))*A with t = exp(-beta * depth).
Tensor apply_haze(const Tensor& input, const Tensor& depth, double airlight, double beta);

Tensor generate_depth(std::int64_t h, std::int64_t w, DepthMode mode, std::uint64_t seed,
                      double value = 1.0);

// Seeded piecewise-smooth color image, used when no source photos are given.
Tensor generate_clean_image(std::int64_t h, std::int64_t w, std::uint64_t seed);

struct SynthOptions {
    std::string hq_dir;         // empty: generate clean images procedurally
    std::string out_dir;
    int count = 64;
    std::string mode = "rain";  // "rain" | "rain_haze"
    std::uint64_t seed = 0;
    std::int64_t image_h = 128, image_w = 128;  // procedural HQ size
    double density = 4.0;       // streak seeds per kilopixel per layer
    double intensity = 0.6;
};

// Writes lq_NNNN.png / hq_NNNN.png pairs plus manifest.jsonl; fully
// reproducible from the seed. Returns the manifest path.
std::string make_dataset(const SynthOptions& opts);

}  // namespace djrhr
