// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "splatprune/error.hpp"
#include "splatprune/hsfh.hpp"

namespace splatprune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitPipeline = 4;
inline constexpr int kExitIo = 5;

int exit_code_for(ErrorCode code);

/// JSON array of {"center": [x, y, z], "forward": [x, y, z]}.
std::vector<Camera> parse_cameras(const std::string& text);

/// "out.ply" + 0.3 -> "out_r30.ply".
std::filesystem::path sweep_path(const std::filesystem::path& base, double ratio);

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace splatprune::cli
