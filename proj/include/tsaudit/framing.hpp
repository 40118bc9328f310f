#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsaudit/data.hpp"
#include "tsaudit/errors.hpp"
#include "tsaudit/grid.hpp"
#include "tsaudit/rng.hpp"

// Frame construction: each univariate window is embedded into an
// alpha x floor(beta*d) matrix of N(0,1) noise at the top, middle or bottom
// third of the time axis, simulating adjacent sliding windows. The cells
// occupied by the real window form the area of interest.

namespace tsaudit::framing {

enum class Placement { Top, Middle, Bottom };

inline constexpr std::array<Placement, 3> kAllPlacements = {
    Placement::Top, Placement::Middle, Placement::Bottom};

inline std::string_view to_string(Placement p) {
  switch (p) {
    case Placement::Top: return "top";
    case Placement::Middle: return "middle";
    case Placement::Bottom: return "bottom";
  }
  return "?";
}

inline Placement placement_from_string(std::string_view s) {
  if (s == "top") return Placement::Top;
  if (s == "middle") return Placement::Middle;
  if (s == "bottom") return Placement::Bottom;
  throw ConfigError("unknown placement: " + std::string(s));
}

// Exact rational for beta so that floor(beta*d) never suffers from binary
// rounding (5/3 * 24 must be exactly 40).
struct Ratio {
  long long num = 5;
  long long den = 3;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // floor(num/den * d) in integer arithmetic
  std::size_t floor_times(std::size_t d) const {
    return static_cast<std::size_t>((num * static_cast<long long>(d)) / den);
  }

  static Ratio parse(std::string_view s) {
    auto slash = s.find('/');
    Ratio r;
    try {
      if (slash == std::string_view::npos) {
        const double v = std::stod(std::string(s));
        r.num = static_cast<long long>(v * 1000000.0 + 0.5);
        r.den = 1000000;
      } else {
        r.num = std::stoll(std::string(s.substr(0, slash)));
        r.den = std::stoll(std::string(s.substr(slash + 1)));
      }
    } catch (const std::exception&) {
      throw ConfigError("cannot parse ratio: " + std::string(s));
    }
    if (r.den <= 0 || r.num <= 0) throw ConfigError("ratio must be positive");
    return r;
  }
};

struct SwapSpec {
  std::size_t i = 0;
  std::size_t j = 0;
};

struct PaddedFrame {
  Grid data;                    // alpha rows (features) x T columns (time)
  Placement placement = Placement::Middle;
  std::size_t signal_feature = 1;
  std::size_t time_offset = 0;
  std::size_t d = 0;
  std::uint64_t noise_seed = 0;  // the derived per-frame stream seed
  std::size_t source_window_id = 0;

  std::size_t alpha() const { return data.rows; }
  std::size_t T() const { return data.cols; }
};

struct Cell {
  std::size_t feature;
  std::size_t time;
  friend bool operator==(const Cell& a, const Cell& b) {
    return a.feature == b.feature && a.time == b.time;
  }
};

inline std::size_t placement_offset(Placement p, std::size_t T, std::size_t d) {
  switch (p) {
    case Placement::Top: return 0;
    case Placement::Middle: return (T - d) / 2;
    case Placement::Bottom: return T - d;
  }
  return 0;
}

// Builds the padded frame for one window. The noise stream is frozen per
// (window, placement, seed): train-time and explain-time frames are
// identical. Noise draws are consumed row-major, skipping window cells.
inline PaddedFrame pad_window(const data::LabeledWindow& window, std::size_t alpha,
                              Ratio beta, Placement placement, std::size_t signal_feature,
                              std::uint64_t seed) {
  const std::size_t d = window.values.size();
  if (alpha <= 1) throw ConfigError("pad_window: alpha must exceed the source feature count (1)");
  if (!(beta.value() > 1.0 && beta.value() < 3.0)) {
    throw ConfigError("pad_window: beta must lie in (1,3)");
  }
  if (signal_feature >= alpha) throw ConfigError("pad_window: signal feature out of range");
  const std::size_t T = beta.floor_times(d);
  if (T < d + 2) {
    throw ConfigError("pad_window: beta*d leaves no room for distinct placements");
  }
  PaddedFrame frame;
  frame.placement = placement;
  frame.signal_feature = signal_feature;
  frame.time_offset = placement_offset(placement, T, d);
  frame.d = d;
  frame.source_window_id = window.window_id;
  frame.noise_seed = rng::derive_seed(
      rng::derive_seed(seed, "frame-noise", window.window_id),
      to_string(placement));
  frame.data = Grid(alpha, T);
  rng::SplitMix64 g(frame.noise_seed);
  for (std::size_t r = 0; r < alpha; ++r) {
    for (std::size_t t = 0; t < T; ++t) {
      const bool in_window =
          r == signal_feature && t >= frame.time_offset && t < frame.time_offset + d;
      frame.data.at(r, t) = in_window ? window.values[t - frame.time_offset]
                                      : rng::gaussian(g);
    }
  }
  return frame;
}

// Exchanges two feature rows for all timestamps; the signal row metadata
// follows the swap.
inline PaddedFrame swap_features(const PaddedFrame& frame, const SwapSpec& swap) {
  if (swap.i == swap.j) throw ConfigError("swap_features: indices must differ");
  if (swap.i >= frame.alpha() || swap.j >= frame.alpha()) {
    throw ConfigError("swap_features: row index out of range");
  }
  PaddedFrame out = frame;
  for (std::size_t t = 0; t < frame.T(); ++t) {
    out.data.at(swap.i, t) = frame.data.at(swap.j, t);
    out.data.at(swap.j, t) = frame.data.at(swap.i, t);
  }
  if (frame.signal_feature == swap.i) {
    out.signal_feature = swap.j;
  } else if (frame.signal_feature == swap.j) {
    out.signal_feature = swap.i;
  }
  return out;
}

// The d cells holding the real window, ordered by the underlying window
// timestamp. Two placements of the same window yield position-wise
// corresponding lists.
inline std::vector<Cell> aoi_cells(const PaddedFrame& frame) {
  std::vector<Cell> cells;
  cells.reserve(frame.d);
  for (std::size_t k = 0; k < frame.d; ++k) {
    cells.push_back({frame.signal_feature, frame.time_offset + k});
  }
  return cells;
}

// Debug dump: `#` metadata line, then one comma-delimited feature row per line.
inline void write_frame(const PaddedFrame& frame, std::ostream& out) {
  out << "# placement=" << to_string(frame.placement)
      << " signal_feature=" << frame.signal_feature
      << " time_offset=" << frame.time_offset << " d=" << frame.d
      << " seed=" << frame.noise_seed << " window_id=" << frame.source_window_id
      << "\n";
  char buf[32];
  for (std::size_t r = 0; r < frame.alpha(); ++r) {
    for (std::size_t t = 0; t < frame.T(); ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.data.at(r, t));
      out << (t == 0 ? "" : ",") << buf;
    }
    out << "\n";
  }
}

inline void write_frame(const PaddedFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write frame file: " + path);
  write_frame(frame, out);
}

inline PaddedFrame read_frame(std::istream& in) {
  PaddedFrame frame;
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto sv = data::detail::trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      for (auto field : data::detail::split_fields(sv.substr(1), ' ')) {
        auto eq = field.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string key(field.substr(0, eq));
        const std::string val(field.substr(eq + 1));
        if (key == "placement") frame.placement = placement_from_string(val);
        else if (key == "signal_feature") frame.signal_feature = std::stoul(val);
        else if (key == "time_offset") frame.time_offset = std::stoul(val);
        else if (key == "d") frame.d = std::stoul(val);
        else if (key == "seed") frame.noise_seed = std::stoull(val);
        else if (key == "window_id") frame.source_window_id = std::stoul(val);
      }
      continue;
    }
    std::vector<double> row;
    for (auto field : data::detail::split_fields(sv, ',')) {
      row.push_back(data::detail::parse_double(field, line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("frame file: ragged row at line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("frame file: no data rows");
  frame.data = Grid(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t t = 0; t < rows[r].size(); ++t) frame.data.at(r, t) = rows[r][t];
  }
  if (frame.d == 0) frame.d = frame.data.cols;
  return frame;
}

inline PaddedFrame read_frame(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame file: " + path);
  return read_frame(in);
}

}  // namespace tsaudit::framing
