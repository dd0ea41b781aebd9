#pragma once

#include <string>

#include "djrhr/adam.hpp"
#include "djrhr/checkpoint.hpp"
#include "djrhr/networks.hpp"

namespace djrhr {

// Serializes the architecture fields, all parameters and the optimizer state
// into one checkpoint; loading reconstructs the network (and optionally the
// optimizer) from the "spec.*" and "adam.*" entries.
Checkpoint to_checkpoint(const Network& net, const Adam* opt = nullptr);
Network network_from_checkpoint(const Checkpoint& ckpt);
void adam_from_checkpoint(const Checkpoint& ckpt, Adam& opt);

void save_model(const std::string& path, const Network& net, const Adam* opt = nullptr);
Network load_model(const std::string& path, Adam* opt = nullptr);

}  // namespace djrhr
