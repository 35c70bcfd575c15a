#pragma once

#include <filesystem>
#include <string>

#include "mchain/nn.hpp"

namespace mchain {

/// Flat JSON snapshot: {"<name>": {"shape": [...], "data": [...]}, ...} in
/// parameter order. Doubles are written with round-trip precision.
std::string params_to_json(const Params& params);
/// Throws std::invalid_argument on malformed documents.
Params params_from_json(const std::string& text);

void save_params(const Params& params, const std::filesystem::path& path);
Params load_params(const std::filesystem::path& path);

}  // namespace mchain
