#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "djrhr/networks.hpp"
#include "djrhr/tensor.hpp"

namespace djrhr {

struct ManifestRow {
    std::string hq_path;
    std::string lq_path;
    std::string mode;  // "rain" | "rain_haze"
};

std::vector<ManifestRow> read_manifest(const std::string& path);

struct TrainOptions {
    ModelKind model = ModelKind::djrhr;
    SrrSpec srr;
    DjrhrSpec djrhr;
    LossWeights loss;
    double lr = 1e-3;
    double lr_decay = 0.95;      // per epoch
    double weight_decay = 1e-4;  // 1e-6 for srr, 1e-4 for djrhr
    int batch = 10;
    int epochs = 30;
    int patch = 64;
    std::uint64_t seed = 0;
    std::string manifest_path;
    std::string checkpoint_path;
};

// Trains the selected model over the manifest's LQ/HQ pairs on random aligned
// patches. Writes the checkpoint after every epoch and JSON-line step/epoch
// records to `log`. Fully deterministic for a fixed seed.
void train(const TrainOptions& opts, std::ostream& log);

}  // namespace djrhr
