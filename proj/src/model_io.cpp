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

#include "bnnsim/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == in_.size(); }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(pos_, std::string("truncated stream while reading ") + what);
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint16_t checked_u16(int v, const char* what) {
  if (v < 0 || v > 0xFFFF) throw ValidationError(std::string(what) + " does not fit in 16 bits");
  return static_cast<std::uint16_t>(v);
}

bool known_kind(std::uint8_t k) { return k >= 1 && k <= 5; }

}  // namespace

std::vector<std::uint8_t> serialize(const NetworkSpec& net) {
  require_valid(net);
  if (net.name.size() > 0xFFFF) throw ValidationError("model name too long");
  ByteWriter w;
  w.bytes(model_format::kMagic);
  w.u16(model_format::kVersion);
  w.u16(static_cast<std::uint16_t>(net.name.size()));
  w.u32(static_cast<std::uint32_t>(net.input_shape.channels));
  w.u32(static_cast<std::uint32_t>(net.input_shape.height));
  w.u32(static_cast<std::uint32_t>(net.input_shape.width));
  w.u8(model_format::kPrecisionQ8_8);
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  w.bytes({reinterpret_cast<const std::uint8_t*>(net.name.data()), net.name.size()});

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const LayerWeights& lw = net.weights[i];
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(0);
    w.u16(0);
    w.u32(static_cast<std::uint32_t>(l.in_channels));
    w.u32(static_cast<std::uint32_t>(l.out_channels));
    w.u16(checked_u16(l.kernel.h, "kernel height"));
    w.u16(checked_u16(l.kernel.w, "kernel width"));
    w.u16(checked_u16(l.stride.h, "stride height"));
    w.u16(checked_u16(l.stride.w, "stride width"));
    w.u16(checked_u16(l.pool.h, "pool height"));
    w.u16(checked_u16(l.pool.w, "pool width"));
    w.u32(static_cast<std::uint32_t>(l.bias.size()));
    const std::size_t count =
        l.kind == LayerKind::FCLast16 ? lw.fixed.size() : lw.bits.valid_bits();
    w.u32(static_cast<std::uint32_t>(count));
  }

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const LayerWeights& lw = net.weights[i];
    for (std::int32_t b : l.bias) w.u32(static_cast<std::uint32_t>(b));
    if (l.kind == LayerKind::FCLast16) {
      for (std::int16_t v : lw.fixed) w.u16(static_cast<std::uint16_t>(v));
    } else if (l.kind != LayerKind::MaxPool) {
      w.bytes(lw.bits.to_bytes());
    }
  }
  return w.take();
}

NetworkSpec deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(model_format::kMagic))) {
    throw FormatError(0, "bad magic number");
  }
  const std::size_t version_at = r.offset();
  if (r.u16("version") != model_format::kVersion) {
    throw FormatError(version_at, "unsupported version");
  }
  const std::uint16_t name_len = r.u16("name length");
  NetworkSpec net;
  net.input_shape.channels = static_cast<int>(r.u32("input channels"));
  net.input_shape.height = static_cast<int>(r.u32("input height"));
  net.input_shape.width = static_cast<int>(r.u32("input width"));
  const std::size_t tag_at = r.offset();
  if (r.u8("precision tag") != model_format::kPrecisionQ8_8) {
    throw FormatError(tag_at, "unknown input precision tag");
  }
  for (int i = 0; i < 3; ++i) {
    const std::size_t at = r.offset();
    if (r.u8("reserved") != 0) throw FormatError(at, "reserved header byte is not zero");
  }
  const std::uint32_t layer_count = r.u32("layer count");
  // Each layer needs at least a descriptor; reject absurd counts before
  // allocating.
  if (layer_count > bytes.size() / model_format::kDescriptorBytes) {
    throw FormatError(r.offset() - 4, "layer count exceeds stream size");
  }
  const auto name = r.bytes(name_len, "model name");
  net.name.assign(name.begin(), name.end());

  struct Counts {
    std::uint32_t bias;
    std::uint32_t weights;
  };
  std::vector<Counts> counts;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec l;
    const std::size_t kind_at = r.offset();
    const std::uint8_t kind = r.u8("layer kind");
    if (!known_kind(kind)) throw FormatError(kind_at, "unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    const std::size_t pad_at = r.offset();
    if (r.u8("reserved") != 0 || r.u16("reserved") != 0) {
      throw FormatError(pad_at, "reserved descriptor bytes are not zero");
    }
    l.in_channels = static_cast<int>(r.u32("in_channels"));
    l.out_channels = static_cast<int>(r.u32("out_channels"));
    l.kernel.h = r.u16("kernel height");
    l.kernel.w = r.u16("kernel width");
    l.stride.h = r.u16("stride height");
    l.stride.w = r.u16("stride width");
    l.pool.h = r.u16("pool height");
    l.pool.w = r.u16("pool width");
    Counts c{r.u32("bias count"), r.u32("weight count")};
    counts.push_back(c);
    net.layers.push_back(std::move(l));
  }

  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec& l = net.layers[i];
    const Counts c = counts[i];
    const auto bias_bytes = r.bytes(std::size_t{c.bias} * 4, "bias block");
    ByteReader br(bias_bytes);
    l.bias.resize(c.bias);
    for (auto& b : l.bias) b = static_cast<std::int32_t>(br.u32("bias"));
    LayerWeights lw;
    if (l.kind == LayerKind::FCLast16) {
      const auto raw = r.bytes(std::size_t{c.weights} * 2, "fc16 weights");
      ByteReader wr(raw);
      lw.fixed.resize(c.weights);
      for (auto& v : lw.fixed) v = static_cast<std::int16_t>(wr.u16("weight"));
    } else if (l.kind != LayerKind::MaxPool) {
      const auto raw = r.bytes((std::size_t{c.weights} + 7) / 8, "binary weights");
      lw.bits = PackedBitVector::from_bytes(raw, c.weights, WordWidth{64});
    } else if (c.weights != 0) {
      throw FormatError(r.offset(), "maxpool layer declares weights");
    }
    net.weights.push_back(std::move(lw));
  }
  if (!r.at_end()) throw FormatError(r.offset(), "trailing bytes after last layer");

  const auto diags = validate(net);
  if (!diags.empty()) {
    throw FormatError(model_format::kHeaderBytes + name_len,
                      "decoded network is invalid: " + diags.front());
  }
  return net;
}

void save_model(const NetworkSpec& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

NetworkSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string> tokens;
  std::istringstream is{std::string(line)};
  for (std::string t; is >> t;) tokens.push_back(t);
  return tokens;
}

int parse_int(const std::string& tok, const std::string& source, std::size_t line,
              const char* what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) {
    throw ParseError(source, line, std::string("expected integer ") + what + ", got '" + tok + "'");
  }
  if (v < 1) throw ParseError(source, line, std::string(what) + " must be >= 1");
  return v;
}

Extent2 parse_extent(const std::string& tok, const std::string& source, std::size_t line,
                     const char* what) {
  const auto x = tok.find('x');
  if (x == std::string::npos) {
    throw ParseError(source, line, std::string("expected ") + what + " as HxW, got '" + tok + "'");
  }
  return {parse_int(tok.substr(0, x), source, line, what),
          parse_int(tok.substr(x + 1), source, line, what)};
}

}  // namespace

Architecture parse_architecture(std::string_view text, const std::string& source) {
  Architecture arch;
  bool have_input = false;
  std::vector<std::size_t> layer_lines;
  std::size_t line_no = 0;
  std::istringstream is{std::string(text)};
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    const auto t = tokenize(line);
    if (t.empty()) continue;
    const std::string& key = t[0];
    auto expect_args = [&](std::size_t lo, std::size_t hi) {
      if (t.size() - 1 < lo || t.size() - 1 > hi) {
        throw ParseError(source, line_no, "wrong number of arguments for '" + key + "'");
      }
    };
    if (key == "name") {
      expect_args(1, 1);
      arch.name = t[1];
    } else if (key == "input") {
      expect_args(3, 3);
      if (have_input) throw ParseError(source, line_no, "duplicate 'input' line");
      arch.input_shape = {parse_int(t[1], source, line_no, "channels"),
                          parse_int(t[2], source, line_no, "height"),
                          parse_int(t[3], source, line_no, "width")};
      have_input = true;
    } else if (key == "conv_first" || key == "conv") {
      if (t.size() != 3 && t.size() != 5) {
        throw ParseError(source, line_no, "expected '" + key + " OUT KHxKW [stride SHxSW]'");
      }
      LayerSpec l;
      l.kind = key == "conv" ? LayerKind::ConvBin : LayerKind::ConvFirst;
      l.out_channels = parse_int(t[1], source, line_no, "out_channels");
      l.kernel = parse_extent(t[2], source, line_no, "kernel");
      if (t.size() == 5) {
        if (t[3] != "stride") throw ParseError(source, line_no, "unexpected token '" + t[3] + "'");
        l.stride = parse_extent(t[4], source, line_no, "stride");
      }
      arch.layers.push_back(l);
      layer_lines.push_back(line_no);
    } else if (key == "fc" || key == "fc16") {
      expect_args(1, 1);
      LayerSpec l;
      l.kind = key == "fc" ? LayerKind::FCBin : LayerKind::FCLast16;
      l.out_channels = parse_int(t[1], source, line_no, "out_channels");
      arch.layers.push_back(l);
      layer_lines.push_back(line_no);
    } else if (key == "maxpool") {
      expect_args(1, 1);
      LayerSpec l;
      l.kind = LayerKind::MaxPool;
      l.pool = parse_extent(t[1], source, line_no, "pool");
      arch.layers.push_back(l);
      layer_lines.push_back(line_no);
    } else {
      throw ParseError(source, line_no, "unknown directive '" + key + "'");
    }
  }
  if (!have_input) throw ParseError(source, line_no, "missing 'input' line");

  auto line_of = [&](const std::string& diag) {
    // Diagnostics start with "layer N: ".
    std::size_t idx = 0;
    if (std::sscanf(diag.c_str(), "layer %zu", &idx) == 1 && idx < layer_lines.size()) {
      return source + ":" + std::to_string(layer_lines[idx]) + ": " + diag;
    }
    return source + ": " + diag;
  };
  Architecture resolved;
  try {
    resolved = arch.resolved();
  } catch (const ValidationError& e) {
    throw ValidationError(line_of(e.what()));
  }
  const auto diags = validate_structure(resolved);
  if (!diags.empty()) {
    std::string msg = "invalid architecture";
    for (const auto& d : diags) msg += "\n  " + line_of(d);
    throw ValidationError(msg);
  }
  return resolved;
}

Architecture load_architecture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open architecture file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_architecture(ss.str(), path.string());
}

std::string format_architecture(const Architecture& arch) {
  std::ostringstream os;
  if (!arch.name.empty()) os << "name " << arch.name << "\n";
  os << "input " << arch.input_shape.channels << " " << arch.input_shape.height << " "
     << arch.input_shape.width << "\n";
  for (const auto& l : arch.layers) {
    os << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::ConvFirst:
      case LayerKind::ConvBin:
        os << " " << l.out_channels << " " << l.kernel.h << "x" << l.kernel.w;
        if (l.stride != Extent2{1, 1}) os << " stride " << l.stride.h << "x" << l.stride.w;
        break;
      case LayerKind::FCBin:
      case LayerKind::FCLast16:
        os << " " << l.out_channels;
        break;
      case LayerKind::MaxPool:
        os << " " << l.pool.h << "x" << l.pool.w;
        break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace bnnsim
