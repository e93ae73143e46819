/* Copyright 2026 The bnnsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnnsim/model.hpp"

namespace bnnsim {

// Binary model file layout. All integers little-endian; see docs/formats.md.
namespace model_format {

inline constexpr std::uint8_t kMagic[4] = {'B', 'N', 'N', 'M'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kPrecisionQ8_8 = 1;
// magic, version, name length, input shape, precision tag, layer count.
inline constexpr std::size_t kHeaderBytes = 28;
inline constexpr std::size_t kDescriptorBytes = 32;

}  // namespace model_format

std::vector<std::uint8_t> serialize(const NetworkSpec& net);
// Throws FormatError carrying the byte offset of the first bad field.
NetworkSpec deserialize(std::span<const std::uint8_t> bytes);

void save_model(const NetworkSpec& net, const std::filesystem::path& path);
NetworkSpec load_model(const std::filesystem::path& path);

// Line-oriented architecture description:
//
//   name stress
//   input 7 1 64               # channels height width
//   conv_first 88 1x5          # out_channels kernel [stride SHxSW]
//   conv 96 1x5 stride 1x1
//   maxpool 1x2
//   fc 64
//   fc16 4
//
// Syntax errors throw ParseError; structural problems throw ValidationError
// whose diagnostics name the offending line. The result is resolved().
Architecture parse_architecture(std::string_view text, const std::string& source = "<arch>");
Architecture load_architecture(const std::filesystem::path& path);
std::string format_architecture(const Architecture& arch);

}  // namespace bnnsim
