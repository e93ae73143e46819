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

#include "bnnsim/input_csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

struct CsvRows {
  std::vector<std::vector<Fixed16>> rows;
  std::vector<std::size_t> lines;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

CsvRows read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file " + path.string());
  CsvRows out;
  std::size_t line_no = 0;
  bool first = true;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    double v = 0;
    if (first && !parse_double(cells.front(), v)) {
      first = false;
      continue;  // header
    }
    first = false;
    std::vector<Fixed16> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      if (!parse_double(cell, v)) {
        throw ParseError(path.string(), line_no, "not a number: '" + cell + "'");
      }
      try {
        row.push_back(Fixed16::from_double(v));
      } catch (const InvalidInputError& e) {
        throw ParseError(path.string(), line_no, e.what());
      }
    }
    out.rows.push_back(std::move(row));
    out.lines.push_back(line_no);
  }
  return out;
}

Fixed16Tensor frame_from_rows(const CsvRows& csv, Shape shape, std::size_t frame,
                              const std::filesystem::path& path) {
  const std::size_t samples = static_cast<std::size_t>(shape.height) * static_cast<std::size_t>(shape.width);
  Fixed16Tensor t(shape);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto& row = csv.rows[frame * samples + s];
    if (row.size() != static_cast<std::size_t>(shape.channels)) {
      throw ContractError(path.string() + ":" + std::to_string(csv.lines[frame * samples + s]) +
                          ": shape mismatch: model expects " + std::to_string(shape.channels) +
                          " channels per sample, row has " + std::to_string(row.size()));
    }
    for (int c = 0; c < shape.channels; ++c) {
      t.data[s * static_cast<std::size_t>(shape.channels) + static_cast<std::size_t>(c)] =
          row[static_cast<std::size_t>(c)];
    }
  }
  return t;
}

}  // namespace

Fixed16Tensor read_input_csv(const std::filesystem::path& path, Shape shape, std::size_t frame) {
  const CsvRows csv = read_rows(path);
  const std::size_t samples = static_cast<std::size_t>(shape.height) * static_cast<std::size_t>(shape.width);
  if ((frame + 1) * samples > csv.rows.size()) {
    throw ContractError(path.string() + ": shape mismatch: frame " + std::to_string(frame) +
                        " of model input " + shape.to_string() + " needs " +
                        std::to_string((frame + 1) * samples) + " samples, file has " +
                        std::to_string(csv.rows.size()));
  }
  return frame_from_rows(csv, shape, frame, path);
}

std::vector<Fixed16Tensor> read_input_frames(const std::filesystem::path& path, Shape shape) {
  const CsvRows csv = read_rows(path);
  const std::size_t samples = static_cast<std::size_t>(shape.height) * static_cast<std::size_t>(shape.width);
  std::vector<Fixed16Tensor> frames;
  for (std::size_t f = 0; (f + 1) * samples <= csv.rows.size(); ++f) {
    frames.push_back(frame_from_rows(csv, shape, f, path));
  }
  return frames;
}

std::vector<Fixed16Tensor> read_corpus(const std::filesystem::path& dir, Shape shape) {
  if (!std::filesystem::is_directory(dir)) throw Error("corpus " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Fixed16Tensor> frames;
  for (const auto& f : files) {
    auto part = read_input_frames(f, shape);
    frames.insert(frames.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  return frames;
}

void write_input_csv(const std::filesystem::path& path, const Fixed16Tensor& frame) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (int c = 0; c < frame.shape.channels; ++c) out << (c ? "," : "") << "ch" << c;
  out << "\n";
  char buf[32];
  for (int h = 0; h < frame.shape.height; ++h) {
    for (int w = 0; w < frame.shape.width; ++w) {
      for (int c = 0; c < frame.shape.channels; ++c) {
        // raw / 256 has at most 8 decimals, so this prints the exact value.
        std::snprintf(buf, sizeof buf, "%.8f", frame.at(c, h, w).to_double());
        out << (c ? "," : "") << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace bnnsim
