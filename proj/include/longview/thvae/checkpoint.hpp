#pragma once

#include <string>

#include "longview/thvae/model.hpp"

namespace longview::thvae {

// Single-file container: magic "THVAE1", little-endian u32 header length,
// JSON header (config, vocabulary, step count, tensor directory), then each
// tensor's values as row-major little-endian float32.
void save_checkpoint(const ThVaeModel& model, const std::string& path);
ThVaeModel load_checkpoint(const std::string& path);

}  // namespace longview::thvae
