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

#include "dive/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dive/error.hpp"

namespace dive {

double DerBreakdown::der() const {
  if (!(scored_speech_s > 0.0)) throw UndefinedDer("no scored reference speech");
  return (missed_s + false_alarm_s + confusion_s) / scored_speech_s;
}

DerBreakdown& DerBreakdown::operator+=(const DerBreakdown& other) {
  missed_s += other.missed_s;
  false_alarm_s += other.false_alarm_s;
  confusion_s += other.confusion_s;
  scored_speech_s += other.scored_speech_s;
  return *this;
}

namespace {

struct Interval {
  double begin;
  double end;
};

/// Piecewise-constant view of ref/hyp activity over scored time.
struct Partition {
  std::vector<std::string> ref_ids, hyp_ids;
  std::vector<double> durations;
  std::vector<std::vector<std::size_t>> ref_active, hyp_active;
};

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

bool inside(const std::vector<Interval>& merged, double t) {
  auto it = std::upper_bound(merged.begin(), merged.end(), t,
                             [](double v, const Interval& iv) { return v < iv.begin; });
  if (it == merged.begin()) return false;
  --it;
  return t < it->end;
}

std::vector<std::size_t> active_at(const SegmentList& segs, const std::vector<std::string>& ids,
                                   double t) {
  std::vector<std::size_t> out;
  for (const auto& s : segs) {
    if (s.onset <= t && t < s.end()) {
      out.push_back(static_cast<std::size_t>(
          std::lower_bound(ids.begin(), ids.end(), s.speaker) - ids.begin()));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Partition partition(const SegmentList& ref, const SegmentList& hyp, const ScoringOptions& opt) {
  if (opt.collar_s < 0) throw InvalidArgument("collar must be non-negative");
  Partition p;
  p.ref_ids = speaker_ids(ref);
  p.hyp_ids = speaker_ids(hyp);
  double end = 0.0;
  for (const auto& s : ref) end = std::max(end, s.end());
  for (const auto& s : hyp) end = std::max(end, s.end());
  if (opt.duration_s) end = *opt.duration_s;

  std::vector<double> points{0.0, end};
  std::vector<Interval> collars;
  for (const auto& s : ref) {
    for (double b : {s.onset, s.end()}) {
      points.push_back(b);
      if (opt.collar_s > 0 && b > 0.0 && b < end) {
        collars.push_back({b - opt.collar_s, b + opt.collar_s});
        points.push_back(b - opt.collar_s);
        points.push_back(b + opt.collar_s);
      }
    }
  }
  for (const auto& s : hyp) {
    points.push_back(s.onset);
    points.push_back(s.end());
  }
  collars = merge(std::move(collars));
  for (double& x : points) x = std::clamp(x, 0.0, end);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double a = points[k], b = points[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    if (inside(collars, mid)) continue;
    auto r = active_at(ref, p.ref_ids, mid);
    if (opt.skip_overlap && r.size() >= 2) continue;
    p.durations.push_back(b - a);
    p.ref_active.push_back(std::move(r));
    p.hyp_active.push_back(active_at(hyp, p.hyp_ids, mid));
  }
  return p;
}

/// assignment[h] = ref index, or >= ref count when unmatched.
std::vector<std::size_t> best_assignment(const Partition& p) {
  const std::size_t nr = p.ref_ids.size(), nh = p.hyp_ids.size();
  if (nr > 8 || nh > 8) throw InvalidArgument("best_mapping supports at most 8 speakers per side");
  std::vector<std::vector<double>> overlap(nh, std::vector<double>(nr, 0.0));
  for (std::size_t k = 0; k < p.durations.size(); ++k) {
    for (std::size_t h : p.hyp_active[k]) {
      for (std::size_t r : p.ref_active[k]) overlap[h][r] += p.durations[k];
    }
  }
  const std::size_t slots = std::max(nr, nh);
  std::vector<std::size_t> perm(slots);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (std::size_t h = 0; h < nh; ++h) {
      if (perm[h] < nr) score += overlap[h][perm[h]];
    }
    if (score > best_score) {
      best_score = score;
      best.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nh));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

SpeakerMapping best_mapping(const SegmentList& ref, const SegmentList& hyp,
                            const ScoringOptions& options) {
  const Partition p = partition(ref, hyp, options);
  const auto assign = best_assignment(p);
  SpeakerMapping out;
  for (std::size_t h = 0; h < assign.size(); ++h) {
    if (assign[h] < p.ref_ids.size()) out[p.hyp_ids[h]] = p.ref_ids[assign[h]];
  }
  return out;
}

DerBreakdown der(const SegmentList& ref, const SegmentList& hyp, const ScoringOptions& options) {
  const Partition p = partition(ref, hyp, options);
  const auto assign = best_assignment(p);
  DerBreakdown out;
  for (std::size_t k = 0; k < p.durations.size(); ++k) {
    const double d = p.durations[k];
    const std::size_t nr = p.ref_active[k].size(), nh = p.hyp_active[k].size();
    std::size_t correct = 0;
    for (std::size_t h : p.hyp_active[k]) {
      const std::size_t r = assign[h];
      if (std::binary_search(p.ref_active[k].begin(), p.ref_active[k].end(), r)) ++correct;
    }
    out.scored_speech_s += d * static_cast<double>(nr);
    if (nr > nh) out.missed_s += d * static_cast<double>(nr - nh);
    if (nh > nr) out.false_alarm_s += d * static_cast<double>(nh - nr);
    out.confusion_s += d * static_cast<double>(std::min(nr, nh) - correct);
  }
  return out;
}

DerBreakdown der(const SegmentList& ref, const SegmentList& hyp, double collar_s, bool skip_overlap) {
  ScoringOptions opt;
  opt.collar_s = collar_s;
  opt.skip_overlap = skip_overlap;
  return der(ref, hyp, opt);
}

namespace {

/// One majority pass. Frames without a full window copy the nearest full-window
/// result; sequences shorter than the window fall back to clamped input taps.
std::vector<std::uint8_t> median_pass(const std::vector<std::uint8_t>& in, std::size_t width) {
  const std::size_t n = in.size();
  const std::size_t half = width / 2;
  std::vector<std::uint8_t> out(n, 0);
  if (n < width) {
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t ones = 0;
      for (std::size_t k = 0; k < width; ++k) {
        const auto i = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(half);
        ones += in[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1))];
      }
      out[t] = 2 * ones > width ? 1 : 0;
    }
    return out;
  }
  std::size_t ones = 0;
  for (std::size_t k = 0; k < width; ++k) ones += in[k];
  for (std::size_t t = half;; ++t) {
    out[t] = 2 * ones > width ? 1 : 0;
    if (t + half + 1 >= n) break;
    ones += in[t + half + 1];
    ones -= in[t - half];
  }
  for (std::size_t t = 0; t < half; ++t) out[t] = out[half];
  for (std::size_t t = n - half; t < n; ++t) out[t] = out[n - 1 - half];
  return out;
}

}  // namespace

std::vector<std::uint8_t> median_filter(std::span<const std::uint8_t> mask, std::size_t width) {
  if (width == 0 || width % 2 == 0) {
    throw InvalidArgument("median filter width must be odd, got " + std::to_string(width));
  }
  std::vector<std::uint8_t> cur(mask.begin(), mask.end());
  for (auto& v : cur) v = v ? 1 : 0;
  if (width == 1 || cur.empty()) return cur;
  // Repeat until the signal is a root of the filter.
  for (std::size_t pass = 0; pass <= cur.size(); ++pass) {
    std::vector<std::uint8_t> next = median_pass(cur, width);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

FrameLabels median_filter(const FrameLabels& labels, std::size_t width) {
  FrameLabels out = labels;
  for (std::size_t i = 0; i < labels.num_speakers; ++i) {
    std::span<const std::uint8_t> row(labels.active.data() + i * labels.num_frames, labels.num_frames);
    const auto filtered = median_filter(row, width);
    std::copy(filtered.begin(), filtered.end(), out.active.begin() + static_cast<std::ptrdiff_t>(i * labels.num_frames));
  }
  return out;
}

SegmentList restrict_to_speech(const SegmentList& hyp, const SegmentList& ref) {
  std::vector<std::pair<double, double>> speech;
  for (const auto& s : ref) speech.emplace_back(s.onset, s.end());
  std::sort(speech.begin(), speech.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : speech) {
    if (!merged.empty() && iv.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  SegmentList out;
  for (const auto& h : hyp) {
    for (const auto& [a, b] : merged) {
      const double lo = std::max(a, h.onset), hi = std::min(b, h.end());
      if (hi > lo) out.push_back({h.speaker, lo, hi - lo});
    }
  }
  sort_segments(out);
  return out;
}

SegmentList masks_to_segments(const FrameLabels& labels) {
  if (!(labels.frame_rate > 0)) throw InvalidArgument("masks_to_segments: frame rate must be positive");
  SegmentList out;
  for (std::size_t i = 0; i < labels.num_speakers; ++i) {
    const std::string id = i < labels.speakers.size() ? labels.speakers[i] : "spk" + std::to_string(i + 1);
    std::size_t t = 0;
    while (t < labels.num_frames) {
      if (!labels.at(i, t)) {
        ++t;
        continue;
      }
      const std::size_t start = t;
      while (t < labels.num_frames && labels.at(i, t)) ++t;
      out.push_back({id, start / labels.frame_rate, (t - start) / labels.frame_rate});
    }
  }
  sort_segments(out);
  return out;
}

namespace {
FrameClass classify(const FrameLabels& y, std::size_t t, bool swap) {
  const bool a = y.at(swap ? 1 : 0, t), b = y.at(swap ? 0 : 1, t);
  if (a && b) return FrameClass::Overlap;
  if (a) return FrameClass::Speaker1;
  if (b) return FrameClass::Speaker2;
  return FrameClass::Silence;
}
}  // namespace

ContingencyTable contingency(const FrameLabels& ref, const FrameLabels& hyp) {
  if (ref.num_speakers != 2 || hyp.num_speakers != 2) {
    throw InvalidArgument("contingency needs two-speaker labels");
  }
  if (ref.num_frames != hyp.num_frames) {
    throw InvalidArgument("contingency: " + std::to_string(ref.num_frames) + " reference frames vs " +
                          std::to_string(hyp.num_frames) + " hypothesis frames");
  }
  std::size_t agree_id = 0, agree_swap = 0;
  for (std::size_t t = 0; t < ref.num_frames; ++t) {
    for (std::size_t i = 0; i < 2; ++i) {
      agree_id += ref.at(i, t) && hyp.at(i, t);
      agree_swap += ref.at(i, t) && hyp.at(1 - i, t);
    }
  }
  const bool swap = agree_swap > agree_id;
  ContingencyTable table;
  table.frames = ref.num_frames;
  for (std::size_t t = 0; t < ref.num_frames; ++t) {
    const auto label = static_cast<std::size_t>(classify(ref, t, false));
    const auto pred = static_cast<std::size_t>(classify(hyp, t, swap));
    ++table.counts[pred][label];
  }
  if (table.frames > 0) {
    const double scale = 100.0 / static_cast<double>(table.frames);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        table.percent[r][c] = table.counts[r][c] * scale;
        table.label_prior[c] += table.counts[r][c] * scale;
      }
    }
  }
  return table;
}

std::string ContingencyTable::to_text() const {
  static constexpr const char* names[4] = {"Spkr.1", "Spkr.2", "Overlap", "Silence"};
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-12s%10s%10s%10s%10s\n", "pred\\label", names[0], names[1], names[2], names[3]);
  out += buf;
  for (std::size_t r = 0; r < 4; ++r) {
    std::snprintf(buf, sizeof(buf), "%-12s%10.1f%10.1f%10.1f%10.1f\n", names[r], percent[r][0],
                  percent[r][1], percent[r][2], percent[r][3]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-12s%10.1f%10.1f%10.1f%10.1f\n", "prior", label_prior[0],
                label_prior[1], label_prior[2], label_prior[3]);
  out += buf;
  return out;
}

std::vector<std::pair<double, double>> cumulative_der(std::span<const double> per_file) {
  if (per_file.empty()) throw InvalidArgument("cumulative_der: no values");
  std::vector<double> sorted(per_file.begin(), per_file.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::string format_cdf(const std::vector<std::pair<double, double>>& cdf) {
  std::string out = "# der_percent\tcumulative_fraction\n";
  char buf[64];
  for (const auto& [v, f] : cdf) {
    std::snprintf(buf, sizeof(buf), "%10.4f\t%8.6f\n", v, f);
    out += buf;
  }
  return out;
}

}  // namespace dive
