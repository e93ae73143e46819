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

#include <iosfwd>
#include <string>
#include <vector>

namespace bnnsim::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,     // I/O and anything unclassified
  kParse = 2,       // bad flags, architecture/CSV/JSON syntax, model byte format
  kValidation = 3,  // structurally invalid network or parameter file
  kContract = 4,    // shape or configuration mismatch
  kMismatch = 5,    // engine disagrees with the reference
};

// Runs one command line (args excludes the program name). Normal output goes
// to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnnsim::cli
