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
#include <stdexcept>
#include <string>

namespace bnnsim {

// Base for every error the library raises. Each subclass maps to a distinct
// CLI exit code (see tools/cli.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text input that could not be parsed (architecture files, CSV, params).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Binary model stream that is malformed. offset is the byte position at which
// decoding stopped.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("model format error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A structurally invalid network or parameter set.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by the caller (shape mismatch, width mismatch, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public ContractError {
 public:
  using ContractError::ContractError;
};

}  // namespace bnnsim
