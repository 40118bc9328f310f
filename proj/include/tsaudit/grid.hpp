#pragma once

#include <cstddef>
#include <vector>

#include "tsaudit/errors.hpp"

namespace tsaudit {

// Plain dense row-major matrix of doubles. Frames, saliency maps and
// gradients all travel as Grids; the autodiff Tensor is a separate type.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Grid(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
      throw DimensionError("grid: value count does not match rows*cols");
    }
  }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Grid& other) const {
    return rows == other.rows && cols == other.cols;
  }
  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

}  // namespace tsaudit
