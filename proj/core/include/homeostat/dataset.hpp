#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "homeostat/mlp.hpp"

namespace homeostat {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Split { Train, Validation };

/// Images as columns (784 x m), pixels scaled to [0,1], labels 0..9.
struct Dataset {
  Mat images;
  std::vector<int> raw_labels;
  Split split = Split::Train;
  int rows = 28;
  int cols = 28;

  int size() const { return static_cast<int>(raw_labels.size()); }
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Reads an IDX image/label file pair (big-endian; .gz accepted by
/// extension). Throws FormatError on bad magic or count mismatch, IoError on
/// missing/truncated files.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 Split split = Split::Train);

/// Writes a dataset back out as a raw IDX pair (no compression).
void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

/// Class-stratified subset of n samples (as equal per class as n permits),
/// sampled without replacement. n <= data.size().
Dataset stratified_subset(const Dataset& data, int n, std::mt19937_64& rng);

/// All samples as one batch.
Batch as_batch(const Dataset& data);

/// Deterministic synthetic 10-class 28x28 image set, IDX-compatible, used
/// where the real digit corpora are not on disk. Class appearance is a
/// seeded blob prototype; samples add translation, gain and pixel noise.
/// noise in [0,1] scales sample corruption (higher = harder).
Dataset make_synthetic(int n, std::uint64_t seed, double noise = 0.35,
                       Split split = Split::Train);

}  // namespace homeostat
