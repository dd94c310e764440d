#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcmr/image.hpp"
#include "dcmr/kspace.hpp"

namespace dcmr {

/// Random ellipse composition standing in for a cardiac slice. The first
/// ellipse is a large body outline; the rest are smaller features.
struct PhantomParams {
  int n_ellipses = 6;
  double intensity_min = 0.1;
  double intensity_max = 1.0;
  /// Semi-axis range as a fraction of the half-extent.
  double size_min = 0.08;
  double size_max = 0.45;
  std::uint64_t seed = 0;
};

RealImage generate_phantom(const PhantomParams& params, int h, int w);

struct CoilMode {
  int n_coils = 1;
  bool multi = false;

  static CoilMode single() { return {1, false}; }
  static CoilMode multi_coil(int n) { return {n, true}; }
  /// "single" or "multi:<n>".
  std::string str() const;
  static CoilMode parse(const std::string& s);
  friend bool operator==(const CoilMode&, const CoilMode&) = default;
};

struct CoilOptions {
  /// Replace every sensitivity profile by the constant 1.
  bool uniform_override = false;
};

/// Smooth positive sensitivity per coil: a Gaussian of width half the image
/// extent centred on the image border at angle 2*pi*c/n (plus a seed-derived
/// rotation shared by all coils).
std::vector<RealImage> coil_sensitivities(int h, int w, int n_coils, std::uint64_t seed, CoilOptions opts = {});
CoilStack simulate_coils(const RealImage& img, int n_coils, std::uint64_t seed, CoilOptions opts = {});

/// Under-sampled magnitude image of `full`. Multi-coil data is combined with
/// RSS and divided by the combined sensitivity so a full mask is an identity.
RealImage degrade(const RealImage& full, const SamplingMask& mask, CoilMode mode, std::uint64_t coil_seed = 0);

/// Corner-aligned bilinear interpolation.
RealImage resize_bilinear(const RealImage& img, int h, int w);

struct SlicePair {
  RealImage under;
  RealImage full;
  int accel = 4;
  CoilMode coil_mode;
  std::uint64_t seed = 0;
};

/// Geometry and degradation settings for one dataset.
struct PairSpec {
  int height = 64;
  int width = 64;
  int accel = 4;
  /// Negative selects default_acs_lines(height).
  int acs_lines = -1;
  CoilMode coil_mode;
  /// k-space zero padding target (0 disables).
  int kspace_pad = 0;
  /// Output size after padding (0 keeps the current size).
  int resize = 0;
  /// Multiply the phantom by a smooth random phase map before the FFT.
  bool smooth_phase = false;
  PhantomParams phantom;
};

/// Runs the full preprocessing chain for one pair. Both images are scaled by
/// the factor that brings max(full) to 1 and clipped to [0, 1].
SlicePair make_pair(const PairSpec& spec, std::uint64_t seed);

struct ManifestEntry {
  std::string id;
  std::string relative_path;
  int accel = 4;
  CoilMode coil_mode;
  std::uint64_t seed = 0;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string split = "train";
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

inline constexpr const char* kManifestFile = "manifest.tsv";

/// Writes `n_pairs` pairs (seeds seed + i) under `out_dir` plus manifest.tsv.
DatasetManifest build_dataset(const PairSpec& spec, int n_pairs, std::uint64_t seed,
                              const std::filesystem::path& out_dir, const std::string& split = "train");
/// Reads `dir/manifest.tsv`; throws if an entry's files are missing.
DatasetManifest load_manifest(const std::filesystem::path& dir);
void write_manifest(const DatasetManifest& m);
SlicePair load_pair(const DatasetManifest& m, const ManifestEntry& e);
std::vector<SlicePair> load_pairs(const DatasetManifest& m);

}  // namespace dcmr
