#pragma once

#include <string>

#include "liftkg/models.hpp"

namespace liftkg {

/// Binary checkpoint with a versioned header; round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace liftkg
