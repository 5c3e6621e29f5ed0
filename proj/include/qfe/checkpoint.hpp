#pragma once

#include <string>

#include "qfe/config.hpp"
#include "qfe/model.hpp"
#include "qfe/optim.hpp"

namespace qfe {

// Versioned binary container: magic + format version + the resolved config
// text + every parameter tensor + the optimizer state.
void save_checkpoint(const std::string& path, const RunConfig& cfg, Model& model,
                     const Adam& adam);

struct LoadedCheckpoint {
    RunConfig config;
    Shape input_shape;
    int n_classes = 0;
    Model model;
    Adam adam;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace qfe
