#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dcmr/error.hpp"

namespace dcmr {

/// Row-major height x width grid of samples.
template <typename V>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<V> data;

  Grid() = default;
  Grid(int h, int w) : height(h), width(w), data(checked_size(h, w)) {}
  Grid(int h, int w, std::vector<V> values) : height(h), width(w), data(std::move(values)) {
    require(data.size() == checked_size(h, w), "grid data length does not match height*width");
  }

  std::size_t size() const { return data.size(); }
  V& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  const V& at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  std::span<V> row(int r) { return {data.data() + static_cast<std::size_t>(r) * width, static_cast<std::size_t>(width)}; }
  std::span<const V> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * width, static_cast<std::size_t>(width)};
  }
  bool same_shape(const Grid& o) const { return height == o.height && width == o.width; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(int h, int w) {
    require(h >= 1 && w >= 1, "grid dimensions must be >= 1");
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
};

using ComplexGrid = Grid<std::complex<float>>;
/// Magnitude slice, or a signed diffusion state x_t.
template <typename T>
using Image = Grid<T>;
using RealImage = Grid<float>;

template <typename V>
void require_same_shape(const Grid<V>& a, const Grid<V>& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": shape mismatch");
}

template <typename To, typename From>
Grid<To> cast_grid(const Grid<From>& g) {
  Grid<To> out(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = static_cast<To>(g.data[i]);
  return out;
}

/// Elementwise clamp of a diffusion output to the magnitude range [0, 1].
RealImage clamp_unit(const RealImage& img);

/// Horizontal (column-reversing) and vertical (row-reversing) flips.
template <typename V>
Grid<V> flip(const Grid<V>& g, bool horizontal, bool vertical) {
  Grid<V> out(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    int sr = vertical ? g.height - 1 - r : r;
    for (int c = 0; c < g.width; ++c) out.at(r, c) = g.at(sr, horizontal ? g.width - 1 - c : c);
  }
  return out;
}

}  // namespace dcmr
