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

#include "dive/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dive/error.hpp"

namespace dive {

double rms(std::span<const float> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t pos) {
  if (pos + 4 > b.size()) throw ParseError("wav: truncated 32-bit field", static_cast<std::int64_t>(pos));
  return static_cast<std::uint32_t>(b[pos]) | (static_cast<std::uint32_t>(b[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(b[pos + 2]) << 16) | (static_cast<std::uint32_t>(b[pos + 3]) << 24);
}
std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t pos) {
  if (pos + 2 > b.size()) throw ParseError("wav: truncated 16-bit field", static_cast<std::int64_t>(pos));
  return static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
}
bool tag_is(std::span<const std::uint8_t> b, std::size_t pos, const char* tag) {
  return pos + 4 <= b.size() && std::memcmp(b.data() + pos, tag, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const Waveform& wav) {
  if (wav.sample_rate <= 0) throw InvalidArgument("wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : wav.samples) {
    const double scaled = std::round(static_cast<double>(s) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

Waveform decode_wav(std::span<const std::uint8_t> b) {
  if (!tag_is(b, 0, "RIFF")) throw ParseError("wav: missing RIFF tag", 0);
  if (!tag_is(b, 8, "WAVE")) throw ParseError("wav: missing WAVE tag", 8);
  std::size_t pos = 12;
  bool have_fmt = false;
  Waveform wav;
  while (pos + 8 <= b.size()) {
    const std::uint32_t chunk = get_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(b, pos, "fmt ")) {
      if (chunk < 16) throw ParseError("wav: fmt chunk too small", static_cast<std::int64_t>(pos + 4));
      const auto format = get_u16(b, body);
      if (format != 1) throw ParseError("wav: only PCM (format 1) is supported", static_cast<std::int64_t>(body));
      if (get_u16(b, body + 2) != 1) {
        throw ParseError("wav: only mono is supported", static_cast<std::int64_t>(body + 2));
      }
      wav.sample_rate = static_cast<int>(get_u32(b, body + 4));
      if (wav.sample_rate <= 0) throw ParseError("wav: bad sample rate", static_cast<std::int64_t>(body + 4));
      if (get_u16(b, body + 14) != 16) {
        throw ParseError("wav: only 16-bit samples are supported", static_cast<std::int64_t>(body + 14));
      }
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) throw ParseError("wav: data chunk before fmt chunk", static_cast<std::int64_t>(pos));
      if (body + chunk > b.size()) {
        throw ParseError("wav: data chunk runs past end of file", static_cast<std::int64_t>(pos + 4));
      }
      wav.samples.resize(chunk / 2);
      for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto q = static_cast<std::int16_t>(get_u16(b, body + 2 * i));
        wav.samples[i] = static_cast<float>(q) / 32768.0f;
      }
      return wav;
    }
    pos = body + chunk + (chunk & 1);
  }
  throw ParseError(have_fmt ? "wav: no data chunk" : "wav: no fmt chunk", static_cast<std::int64_t>(pos));
}

void write_wav(const std::filesystem::path& path, const Waveform& wav) {
  const auto bytes = encode_wav(wav);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

}  // namespace dive
