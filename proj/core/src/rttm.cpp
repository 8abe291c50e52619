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

#include "dive/segments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "dive/error.hpp"

namespace dive {

void sort_segments(SegmentList& segments) {
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.speaker < b.speaker;
  });
}

std::vector<std::string> speaker_ids(const SegmentList& segments) {
  std::set<std::string> ids;
  for (const auto& s : segments) ids.insert(s.speaker);
  return {ids.begin(), ids.end()};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvalidArgument("cannot format time value");
  return std::string(buf, end);
}

double parse_double(std::string_view token, std::int64_t line, const char* what) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw ParseError("rttm: bad " + std::string(what) + " '" + std::string(token) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

RttmFiles parse_rttm(std::string_view text) {
  RttmFiles files;
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == ';' || tok[0].front() == '#') continue;
    if (tok[0] != "SPEAKER") continue;
    if (tok.size() < 8) {
      throw ParseError("rttm: SPEAKER record needs at least 8 fields, got " +
                           std::to_string(tok.size()), line_no);
    }
    Segment seg;
    seg.onset = parse_double(tok[3], line_no, "onset");
    seg.duration = parse_double(tok[4], line_no, "duration");
    seg.speaker = std::string(tok[7]);
    if (seg.onset < 0) throw ParseError("rttm: negative onset", line_no);
    if (!(seg.duration > 0)) throw ParseError("rttm: duration must be positive", line_no);
    files[std::string(tok[1])].push_back(std::move(seg));
  }
  for (auto& [_, segs] : files) sort_segments(segs);
  return files;
}

std::string format_rttm(const std::string& file_id, const SegmentList& segments) {
  SegmentList sorted = segments;
  sort_segments(sorted);
  std::string out;
  for (const auto& s : sorted) {
    out += "SPEAKER " + file_id + " 1 " + format_double(s.onset) + " " +
           format_double(s.duration) + " <NA> <NA> " + s.speaker + " <NA> <NA>\n";
  }
  return out;
}

std::string format_rttm(const RttmFiles& files) {
  std::string out;
  for (const auto& [id, segs] : files) out += format_rttm(id, segs);
  return out;
}

RttmFiles read_rttm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rttm(buf.str());
}

void write_rttm(const std::filesystem::path& path, const RttmFiles& files) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << format_rttm(files);
}

void write_rttm(const std::filesystem::path& path, const std::string& file_id,
                const SegmentList& segments) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << format_rttm(file_id, segments);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string(), 0);
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("manifest: expected 'wav<TAB>rttm'", line_no);
    }
    std::filesystem::path wav = line.substr(0, tab), rttm = line.substr(tab + 1);
    if (wav.is_relative()) wav = base / wav;
    if (rttm.is_relative()) rttm = base / rttm;
    entries.push_back({wav, rttm});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write manifest " + path.string());
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    std::error_code ec;
    auto r = std::filesystem::relative(p, base, ec);
    return (ec || r.empty()) ? p : r;
  };
  for (const auto& e : entries) out << rel(e.wav).string() << '\t' << rel(e.rttm).string() << '\n';
}

}  // namespace dive
