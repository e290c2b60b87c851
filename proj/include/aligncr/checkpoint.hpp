#pragma once

#include <string>
#include <vector>

#include "aligncr/model.hpp"

namespace aligncr {

// Optimizer state carried inside training checkpoints so a resumed run
// continues bit-identically.
struct OptState {
  std::map<std::string, Array> velocity;
  std::uint64_t step = 0;

  bool present() const { return !velocity.empty(); }
};

// Versioned binary container: magic, version, ModelConfig, then each named
// parameter as (name, rank, dims, little-endian doubles), then an optional
// optimizer-state section. Written via a temp file and rename.
void save_checkpoint(const ModelParams& params, const std::string& path,
                     const OptState* opt = nullptr);
ModelParams load_checkpoint(const std::string& path, OptState* opt = nullptr);

}  // namespace aligncr
