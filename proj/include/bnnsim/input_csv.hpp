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

#include <filesystem>
#include <string>
#include <vector>

#include "bnnsim/model.hpp"

namespace bnnsim {

// Input frames as CSV: one row per time sample, one column per channel,
// decimal values rounded to Q8.8. An optional non-numeric header row is
// skipped. A frame of shape (C, H, W) consumes H*W consecutive rows; row
// h*W + w holds sample (., h, w).

// Frame `frame` (0-based) of the file. Throws ContractError naming the
// expected and actual dimensions, ParseError for malformed cells.
Fixed16Tensor read_input_csv(const std::filesystem::path& path, Shape shape, std::size_t frame = 0);
// Every complete frame in the file.
std::vector<Fixed16Tensor> read_input_frames(const std::filesystem::path& path, Shape shape);
// Every frame of every *.csv file in dir, files in lexical order.
std::vector<Fixed16Tensor> read_corpus(const std::filesystem::path& dir, Shape shape);

void write_input_csv(const std::filesystem::path& path, const Fixed16Tensor& frame);

}  // namespace bnnsim
