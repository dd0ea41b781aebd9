#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "djrhr/tensor.hpp"

namespace djrhr {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointFormatError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct CheckpointVersionError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct CheckpointShapeError : CheckpointError {
    using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Flat list of named float32 arrays. Parameter entries come first; optimizer
// state is appended under "adam.m.<name>", "adam.v.<name>" and "adam.t";
// architecture fields live under "spec.*".
struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> entries;

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : entries) {
            if (n == name) return &t;
        }
        return nullptr;
    }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace djrhr
