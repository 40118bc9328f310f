#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsaudit/errors.hpp"
#include "tsaudit/rng.hpp"

// UCR-style univariate dataset handling: parsing, z-score normalization from
// train-split statistics, and synthetic fixtures with a known discriminative
// region.

namespace tsaudit::data {

// One univariate window with its class label.
struct LabeledWindow {
  std::vector<double> values;
  std::size_t label = 0;
  std::size_t window_id = 0;

  friend bool operator==(const LabeledWindow& a, const LabeledWindow& b) {
    return a.values == b.values && a.label == b.label && a.window_id == b.window_id;
  }
};

struct Dataset {
  std::string name;
  std::size_t d = 0;
  std::size_t num_classes = 0;
  std::vector<LabeledWindow> windows;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  std::vector<std::string> original_labels;  // index = remapped label
  bool normalized = false;
  double norm_mean = 0.0;
  double norm_std = 1.0;
};

enum class Delimiter { Auto, Comma, Tab };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError("parse error at line " + std::to_string(line_no) +
                    ": non-numeric field '" + std::string(tok) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline void parse_lines(std::istream& in, Delimiter delim, Dataset& ds,
                        std::vector<std::size_t>& idx_out,
                        std::map<std::string, std::size_t>& label_map) {
  std::string line;
  std::size_t line_no = 0;
  char sep = delim == Delimiter::Tab ? '\t' : ',';
  bool sep_fixed = delim != Delimiter::Auto;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      // header comment; pick up name/classes metadata when present
      for (auto field : split_fields(sv.substr(1), ' ')) {
        auto eq = field.find('=');
        if (eq == std::string_view::npos) continue;
        auto key = field.substr(0, eq);
        auto val = field.substr(eq + 1);
        if (key == "name" && ds.name.empty()) ds.name = std::string(val);
      }
      continue;
    }
    if (!sep_fixed) {
      sep = sv.find('\t') != std::string_view::npos ? '\t' : ',';
      sep_fixed = true;
    }
    auto fields = split_fields(sv, sep);
    if (fields.size() < 2) {
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": expected a label and at least one value");
    }
    if (ds.d == 0) {
      ds.d = fields.size() - 1;
      if (ds.d < 3) throw DataError("window length must be at least 3");
    } else if (fields.size() - 1 != ds.d) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(ds.d + 1) + " fields, found " +
                      std::to_string(fields.size()));
    }
    LabeledWindow w;
    const std::string label_token(fields[0]);
    auto [it, inserted] = label_map.try_emplace(label_token, ds.original_labels.size());
    if (inserted) ds.original_labels.push_back(label_token);
    w.label = it->second;
    w.window_id = ds.windows.size();
    w.values.reserve(ds.d);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      w.values.push_back(parse_double(fields[i], line_no));
    }
    idx_out.push_back(ds.windows.size());
    ds.windows.push_back(std::move(w));
  }
}

}  // namespace detail

// Parses a UCR-style file: one window per line, label first. Labels are
// remapped to 0..C-1 in order of first appearance; the original spellings are
// kept in original_labels. All windows land in the train split; call a split
// function afterwards.
inline Dataset parse_ucr(std::istream& in, Delimiter delim = Delimiter::Auto,
                         std::string name = "") {
  Dataset ds;
  ds.name = std::move(name);
  std::map<std::string, std::size_t> label_map;
  detail::parse_lines(in, delim, ds, ds.train_idx, label_map);
  if (ds.windows.empty()) throw DataError("empty dataset");
  ds.num_classes = ds.original_labels.size();
  return ds;
}

inline Dataset parse_ucr(const std::string& path, Delimiter delim = Delimiter::Auto,
                         std::string name = "") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return parse_ucr(in, delim, std::move(name));
}

// Archive-native TRAIN/TEST pair; window ids continue across the two files.
inline Dataset parse_ucr_pair(const std::string& train_path, const std::string& test_path,
                              Delimiter delim = Delimiter::Auto, std::string name = "") {
  std::ifstream train_in(train_path);
  if (!train_in) throw DataError("cannot open dataset file: " + train_path);
  std::ifstream test_in(test_path);
  if (!test_in) throw DataError("cannot open dataset file: " + test_path);
  Dataset ds;
  ds.name = std::move(name);
  std::map<std::string, std::size_t> label_map;
  detail::parse_lines(train_in, delim, ds, ds.train_idx, label_map);
  if (ds.train_idx.empty()) throw DataError("empty dataset");
  detail::parse_lines(test_in, delim, ds, ds.test_idx, label_map);
  ds.num_classes = ds.original_labels.size();
  return ds;
}

// Seeded 70/30-style split over all windows; deterministic under (seed, fraction).
inline void seeded_split(Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ConfigError("split: train fraction must lie in (0,1)");
  }
  std::vector<std::size_t> order(ds.windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::SplitMix64 g(rng::derive_seed(seed, "dataset-split"));
  rng::shuffle(order, g);
  const std::size_t n_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(order.size() * train_fraction));
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.test_idx.assign(order.begin() + n_train, order.end());
}

// First n_train windows train, the rest test (for synthetic data, where
// windows are i.i.d. by construction).
inline void split_by_counts(Dataset& ds, std::size_t n_train) {
  if (n_train == 0 || n_train >= ds.windows.size()) {
    throw ConfigError("split: train count must leave a non-empty test split");
  }
  ds.train_idx.clear();
  ds.test_idx.clear();
  for (std::size_t i = 0; i < ds.windows.size(); ++i) {
    (i < n_train ? ds.train_idx : ds.test_idx).push_back(i);
  }
}

// Z-scores every window (both splits) with mean/std taken from the train
// split only, so that padding noise drawn from N(0,1) is commensurate with
// the signal.
inline void normalize(Dataset& ds) {
  if (ds.train_idx.empty()) throw DataError("normalize: train split is empty");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i : ds.train_idx) {
    for (double v : ds.windows[i].values) sum += v;
    n += ds.windows[i].values.size();
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i : ds.train_idx) {
    for (double v : ds.windows[i].values) ss += (v - mean) * (v - mean);
  }
  const double stddev = std::sqrt(ss / static_cast<double>(n));
  if (stddev < 1e-12 * (1.0 + std::fabs(mean))) {
    throw DataError("normalize: zero variance (degenerate dataset)");
  }
  for (auto& w : ds.windows) {
    for (double& v : w.values) v = (v - mean) / stddev;
  }
  ds.normalized = true;
  ds.norm_mean = mean;
  ds.norm_std = stddev;
}

enum class Pattern { SignBump, HalvesBump };

inline Pattern pattern_from_string(std::string_view s) {
  if (s == "sign") return Pattern::SignBump;
  if (s == "halves") return Pattern::HalvesBump;
  throw ConfigError("unknown synthetic pattern: " + std::string(s));
}

struct SynthSpec {
  std::size_t d = 12;
  std::size_t num_windows = 300;
  Pattern pattern = Pattern::SignBump;
  std::uint64_t seed = 1;
  double train_fraction = 0.7;
};

// Two-class fixture: every cell is N(0,1) noise plus a class-conditional
// bump. `sign` places the same bump with opposite signs at the window
// center (separable regardless of frame placement); `halves` centers the
// bump in the first vs second half of the window.
inline Dataset synthesize(const SynthSpec& spec) {
  if (spec.d < 8) throw ConfigError("synthesize: window length must be >= 8");
  if (spec.num_windows < 2) throw ConfigError("synthesize: need at least two windows");
  Dataset ds;
  ds.name = "synthetic";
  ds.d = spec.d;
  ds.num_classes = 2;
  ds.original_labels = {"0", "1"};
  const std::size_t width =
      std::max<std::size_t>(3, spec.pattern == Pattern::SignBump ? spec.d / 2 : spec.d / 4);
  const double amplitude = 3.0;
  for (std::size_t i = 0; i < spec.num_windows; ++i) {
    LabeledWindow w;
    w.window_id = i;
    w.label = i % 2;
    w.values.resize(spec.d);
    rng::SplitMix64 g(rng::derive_seed(spec.seed, "synth-window", i));
    for (double& v : w.values) v = rng::gaussian(g);
    std::size_t start = 0;
    double sign = 1.0;
    if (spec.pattern == Pattern::SignBump) {
      start = spec.d / 2 - width / 2;
      sign = w.label == 0 ? 1.0 : -1.0;
    } else {
      start = w.label == 0 ? spec.d / 4 - width / 2 : (3 * spec.d) / 4 - width / 2;
      start = std::min(start, spec.d - width);
    }
    for (std::size_t j = 0; j < width; ++j) {
      const double phase = 3.14159265358979323846 * static_cast<double>(j + 1) /
                           static_cast<double>(width + 1);
      w.values[start + j] += sign * amplitude * std::sin(phase) * std::sin(phase);
    }
    ds.windows.push_back(std::move(w));
  }
  const std::size_t n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(spec.num_windows * spec.train_fraction));
  split_by_counts(ds, std::min(n_train, spec.num_windows - 1));
  return ds;
}

// Canonical dataset file: `#` metadata line, then one comma-delimited window
// per line, label first, values with 17 significant digits (lossless for
// doubles).
inline void write_canonical(const Dataset& ds, std::ostream& out,
                            const std::vector<std::size_t>* subset = nullptr,
                            std::string_view split_name = "") {
  out << "# name=" << (ds.name.empty() ? "dataset" : ds.name)
      << " classes=" << ds.num_classes << " d=" << ds.d;
  if (!split_name.empty()) out << " split=" << split_name;
  if (ds.normalized) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " normalized=1 mean=%.17g std=%.17g", ds.norm_mean,
                  ds.norm_std);
    out << buf;
  }
  out << "\n";
  auto write_window = [&](const LabeledWindow& w) {
    out << w.label;
    char buf[32];
    for (double v : w.values) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << "\n";
  };
  if (subset != nullptr) {
    for (std::size_t i : *subset) write_window(ds.windows[i]);
  } else {
    for (const auto& w : ds.windows) write_window(w);
  }
}

inline void write_canonical(const Dataset& ds, const std::string& path,
                            const std::vector<std::size_t>* subset = nullptr,
                            std::string_view split_name = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  write_canonical(ds, out, subset, split_name);
}

// FNV-1a over labels and value bytes; identifies the exact dataset content a
// model was trained on.
inline std::uint64_t fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& w : ds.windows) {
    mix_bytes(&w.label, sizeof w.label);
    mix_bytes(w.values.data(), w.values.size() * sizeof(double));
  }
  return h;
}

}  // namespace tsaudit::data
