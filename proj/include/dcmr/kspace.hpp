#pragma once

#include <set>
#include <vector>

#include "dcmr/image.hpp"

namespace dcmr {

// Centered, orthonormal 2D DFT: the DC term sits at (floor(h/2), floor(w/2))
// and both directions carry a 1/sqrt(h*w) factor, so idft2(dft2(x)) == x and
// energy is preserved.
ComplexGrid dft2(const ComplexGrid& img);
ComplexGrid idft2(const ComplexGrid& k);

/// Embeds `k` in a zero grid of the target size; the source block starts at
/// floor((target - source) / 2) on each axis.
ComplexGrid zero_pad_center(const ComplexGrid& k, int target_h, int target_w);
/// Inverse of zero_pad_center: extracts the centered h x w block.
ComplexGrid crop_center(const ComplexGrid& k, int h, int w);

/// Row-selection pattern for Cartesian undersampling. Rows are phase-encode lines.
struct SamplingMask {
  int height = 0;
  std::set<int> kept_rows;

  bool keeps(int row) const { return kept_rows.contains(row); }
  double fraction() const { return static_cast<double>(kept_rows.size()) / height; }
  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;
};

/// Every `accel`-th row from row 0, plus `acs_lines` consecutive rows
/// starting at floor(height/2) - floor(acs_lines/2).
SamplingMask make_striped_mask(int height, int accel, int acs_lines);
/// Autocalibration band width scaled from 24 lines at 512 rows.
int default_acs_lines(int height);
SamplingMask full_mask(int height);

ComplexGrid apply_mask(const ComplexGrid& k, const SamplingMask& m);

struct CoilStack {
  std::vector<ComplexGrid> grids;

  CoilStack() = default;
  explicit CoilStack(std::vector<ComplexGrid> g);
  int n_coils() const { return static_cast<int>(grids.size()); }
};

/// Per-pixel sqrt(sum_c |coil_c|^2) over image-domain coil grids.
RealImage rss(const CoilStack& coils);

RealImage magnitude(const ComplexGrid& g);
ComplexGrid to_complex(const RealImage& img);
double l2_norm(const ComplexGrid& g);

}  // namespace dcmr
