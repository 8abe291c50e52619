// Copyright 2026 The DIVE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dive/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dive/error.hpp"

namespace dive {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void put(T v) { raw(&v, sizeof(T)); }
  void entry(const std::string& name, const Tensor& t) {
    if (name.size() > 0xFFFF) throw InvalidArgument("parameter name too long: " + name);
    if (t.rank() > 0xFF) throw InvalidArgument("tensor rank too large for " + name);
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    raw(name.data(), name.size());
    put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(static_cast<std::uint32_t>(d));
    raw(t.data(), t.size() * sizeof(float));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void raw(void* p, std::size_t n, const std::string& field) {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(field, "truncated at byte " + std::to_string(pos_));
    }
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get(const std::string& field) {
    T v;
    raw(&v, sizeof(T), field);
    return v;
  }
  std::pair<std::string, Tensor> entry(const std::string& field) {
    const auto len = get<std::uint16_t>(field + ".name_length");
    std::string name(len, '\0');
    raw(name.data(), len, field + ".name");
    const auto rank = get<std::uint8_t>(field + ".rank");
    Shape shape;
    for (std::uint8_t i = 0; i < rank; ++i) shape.push_back(get<std::uint32_t>(field + ".dims"));
    const std::size_t n = shape_size(shape);
    if (n > (bytes_.size() - pos_) / sizeof(float)) {
      throw FormatError(field + ".values", "declares " + std::to_string(n) +
                                               " floats but file is too short");
    }
    std::vector<float> values(n);
    raw(values.data(), n * sizeof(float), field + ".values");
    return {std::move(name), Tensor(std::move(shape), std::move(values))};
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw("DIVE", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  std::string header;
  for (const auto& [k, v] : ckpt.header) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidArgument("header entry cannot contain '=' in key or newlines: " + k);
    }
    header += k + "=" + v + "\n";
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.raw(header.data(), header.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) w.entry(name, t);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.adam.first_moment.size() +
                                                  ckpt.adam.second_moment.size()));
  for (const auto& [name, t] : ckpt.adam.first_moment) w.entry(name + ".m", t);
  for (const auto& [name, t] : ckpt.adam.second_moment) w.entry(name + ".v", t);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ckpt.adam.step));
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, "DIVE", 4) != 0) throw FormatError("magic", "not a DIVE checkpoint");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("version", "unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto header_len = r.get<std::uint32_t>("header_length");
  std::string header(header_len, '\0');
  r.raw(header.data(), header_len, "header");
  std::size_t start = 0;
  while (start < header.size()) {
    std::size_t end = header.find('\n', start);
    if (end == std::string::npos) throw FormatError("header", "unterminated line");
    const std::string line = header.substr(start, end - start);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("header", "line without '=': " + line);
    ckpt.header[line.substr(0, eq)] = line.substr(eq + 1);
    start = end + 1;
  }
  const auto count = r.get<std::uint32_t>("param_count");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = r.entry("param[" + std::to_string(i) + "]");
    if (ckpt.params.contains(name)) throw FormatError("param[" + std::to_string(i) + "].name", "duplicate " + name);
    ckpt.params.add(name, std::move(t));
  }
  const auto moments = r.get<std::uint32_t>("moment_count");
  for (std::uint32_t i = 0; i < moments; ++i) {
    const std::string field = "moment[" + std::to_string(i) + "]";
    auto [name, t] = r.entry(field);
    if (name.size() < 3 || name[name.size() - 2] != '.' ||
        (name.back() != 'm' && name.back() != 'v')) {
      throw FormatError(field + ".name", "moment name must end in .m or .v: " + name);
    }
    const std::string base = name.substr(0, name.size() - 2);
    if (!ckpt.params.contains(base) || ckpt.params.at(base).shape() != t.shape()) {
      throw FormatError(field + ".name", "no matching parameter for " + name);
    }
    auto& dst = name.back() == 'm' ? ckpt.adam.first_moment : ckpt.adam.second_moment;
    if (dst.contains(base)) throw FormatError(field + ".name", "duplicate " + name);
    dst.add(base, std::move(t));
  }
  ckpt.adam.step = static_cast<std::int64_t>(r.get<std::uint64_t>("step"));
  if (!r.done()) throw FormatError("trailer", "unexpected bytes after step counter");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  // Write-then-rename.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidArgument("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("file", "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace dive
