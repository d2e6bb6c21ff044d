#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "promptrec/model.hpp"

namespace promptrec {

// Checkpoint container: a text header listing (name, shape, byte offset) per
// tensor plus config echo and seed, followed by a payload of little-endian
// 8-byte IEEE-754 values. Writing is fully deterministic, so identical
// models produce identical files.
void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed,
                     const std::map<std::string, std::string>& config_echo = {});

struct LoadedCheckpoint {
    Model model;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config_echo;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace promptrec
