#pragma once

#include "regap/model.hpp"

#include <memory>
#include <string>

namespace regap::model {

/// Single-file binary model format: magic "RGAE", u16 version, u8 kind,
/// shape header, little-endian f64 weight payloads. Round trips are bit-exact.
void save_model(const std::string& path, const AutoencoderPair& pair);
std::unique_ptr<AutoencoderPair> load_model(const std::string& path);

}  // namespace regap::model
