#pragma once

#include <string>

#include "driftlab/model/model.hpp"

namespace driftlab {

// Binary checkpoint: magic, JSON header (config, vocabulary, tensor
// shapes), then the parameter values as little-endian doubles. Loading
// rebuilds the arena from the stored config and refuses mismatched shapes.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace driftlab
