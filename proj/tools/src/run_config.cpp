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

#include "dive/cli/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dive/error.hpp"

namespace dive::cli {

namespace {

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw InvalidArgument("config key '" + key + "': expected true/false, got '" + text + "'");
  } else {
    T out{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc() || ptr != end || text.empty()) {
      throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "'");
    }
    return out;
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  }
}

template <typename T>
Field field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& s) { c.*member = parse_value<T>("", s); },
          [member](const RunConfig& c) { return format_value(c.*member); }};
}

template <typename Owner, typename T>
Field nested(Owner RunConfig::*owner, T Owner::*member) {
  return {[owner, member](RunConfig& c, const std::string& s) {
            (c.*owner).*member = parse_value<T>("", s);
          },
          [owner, member](const RunConfig& c) { return format_value((c.*owner).*member); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"sample_rate", nested(&RunConfig::model, &ModelConfig::sample_rate)},
      {"channels", nested(&RunConfig::model, &ModelConfig::channels)},
      {"input_kernel", nested(&RunConfig::model, &ModelConfig::input_kernel)},
      {"input_stride", nested(&RunConfig::model, &ModelConfig::input_stride)},
      {"num_blocks", nested(&RunConfig::model, &ModelConfig::num_blocks)},
      {"layers_per_block", nested(&RunConfig::model, &ModelConfig::layers_per_block)},
      {"block_kernel", nested(&RunConfig::model, &ModelConfig::block_kernel)},
      {"pool_kernel", nested(&RunConfig::model, &ModelConfig::pool_kernel)},
      {"pool_stride", nested(&RunConfig::model, &ModelConfig::pool_stride)},
      {"hidden_layers", nested(&RunConfig::model, &ModelConfig::hidden_layers)},
      {"window_length", nested(&RunConfig::model, &ModelConfig::window_length)},
      {"windows", nested(&RunConfig::model, &ModelConfig::windows_per_example)},
      {"collar_train_s", nested(&RunConfig::model, &ModelConfig::collar_radius_s)},
      {"num_speakers", nested(&RunConfig::model, &ModelConfig::num_speakers)},
      {"prelu_init", nested(&RunConfig::model, &ModelConfig::prelu_init)},
      {"layer_norm_eps", nested(&RunConfig::model, &ModelConfig::layer_norm_eps)},
      {"base_lr", nested(&RunConfig::adam, &AdamConfig::base_lr)},
      {"beta1", nested(&RunConfig::adam, &AdamConfig::beta1)},
      {"beta2", nested(&RunConfig::adam, &AdamConfig::beta2)},
      {"adam_eps", nested(&RunConfig::adam, &AdamConfig::epsilon)},
      {"decay_every", nested(&RunConfig::adam, &AdamConfig::decay_every)},
      {"decay_factor", nested(&RunConfig::adam, &AdamConfig::decay_factor)},
      {"batch_size", field(&RunConfig::batch_size)},
      {"total_steps", field(&RunConfig::total_steps)},
      {"seed", field(&RunConfig::seed)},
      {"collar_eval_s", field(&RunConfig::collar_eval_s)},
      {"checkpoint_every", field(&RunConfig::checkpoint_every)},
      {"validate_every", field(&RunConfig::validate_every)},
      {"validation_fraction", field(&RunConfig::validation_fraction)},
      {"validation_files", field(&RunConfig::validation_files)},
      {"median_width", field(&RunConfig::median_width)},
      {"noise_prob", field(&RunConfig::noise_prob)},
      {"noise_min_db", field(&RunConfig::noise_min_db)},
      {"noise_max_db", field(&RunConfig::noise_max_db)},
      {"output_dir", field(&RunConfig::output_dir)},
      {"duration_s", nested(&RunConfig::synth, &SynthConfig::duration_s)},
      {"turn_median_s", nested(&RunConfig::synth, &SynthConfig::turn_median_s)},
      {"turn_sigma", nested(&RunConfig::synth, &SynthConfig::turn_sigma)},
      {"overlap_prob", nested(&RunConfig::synth, &SynthConfig::overlap_prob)},
      {"silence_prob", nested(&RunConfig::synth, &SynthConfig::silence_prob)},
      {"min_solo_s", nested(&RunConfig::synth, &SynthConfig::min_solo_s)},
      {"min_f0_ratio", nested(&RunConfig::synth, &SynthConfig::min_f0_ratio)},
  };
  return table;
}

const Field& lookup(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw InvalidArgument("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::desk() { return RunConfig{}; }

RunConfig RunConfig::paper() {
  RunConfig c;
  c.model = ModelConfig::paper();
  c.batch_size = 512;
  c.total_steps = 200000;
  c.checkpoint_every = 5000;
  c.validate_every = 5000;
  c.synth.duration_s = 60.0;
  c.noise_prob = 1.0;
  return c;
}

RunConfig RunConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw InvalidArgument("unknown preset '" + name + "' (expected desk or paper)");
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    lookup(key).set(*this, value);
  } catch (const InvalidArgument& e) {
    if (std::string(e.what()).rfind("unknown", 0) == 0) throw;
    throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "'");
  }
  if (key == "sample_rate") synth.sample_rate = model.sample_rate;
  if (key == "num_speakers") synth.num_speakers = model.num_speakers;
}

std::string RunConfig::get(const std::string& key) const { return lookup(key).get(*this); }

void RunConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::int64_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line lacks '='", number);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set(key, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), number);
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + "=" + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (total_steps < 0) throw InvalidArgument("total_steps must be non-negative");
  if (checkpoint_every <= 0) throw InvalidArgument("checkpoint_every must be positive");
  if (validate_every <= 0) throw InvalidArgument("validate_every must be positive");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw InvalidArgument("validation_fraction must lie in [0, 1)");
  }
  if (median_width == 0 || median_width % 2 == 0) throw InvalidArgument("median_width must be odd");
  if (!(noise_prob >= 0 && noise_prob <= 1)) throw InvalidArgument("noise_prob must lie in [0, 1]");
  if (noise_min_db > noise_max_db) throw InvalidArgument("noise_min_db exceeds noise_max_db");
  if (collar_eval_s < 0) throw InvalidArgument("collar_eval_s must be non-negative");
  if (adam.base_lr <= 0 || adam.decay_every <= 0) {
    throw InvalidArgument("base_lr and decay_every must be positive");
  }
}

void apply_seed_env(RunConfig& config) {
  if (const char* s = std::getenv("DIVE_SEED"); s && *s) config.set("seed", s);
}

}  // namespace dive::cli
