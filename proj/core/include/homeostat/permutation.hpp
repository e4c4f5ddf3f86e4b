#pragma once

#include <array>
#include <stdexcept>

namespace homeostat {

inline constexpr int kNumClasses = 10;

/// The current concept: a bijection on class indices. Serving a sample with
/// raw label y presents it as map[y].
struct LabelPermutation {
  std::array<int, kNumClasses> map{};

  static LabelPermutation identity() {
    LabelPermutation p;
    for (int i = 0; i < kNumClasses; ++i) p.map[i] = i;
    return p;
  }

  int relabel(int label) const { return map.at(static_cast<std::size_t>(label)); }

  bool is_bijection() const {
    std::array<int, kNumClasses> seen{};
    for (int v : map) {
      if (v < 0 || v >= kNumClasses || seen[static_cast<std::size_t>(v)]++) return false;
    }
    return true;
  }

  bool operator==(const LabelPermutation&) const = default;
};

/// Exchanges the images of classes a and b (a != b).
inline LabelPermutation swap_pair(LabelPermutation perm, int a, int b) {
  if (a == b) throw std::invalid_argument("swap_pair: classes must be distinct");
  if (a < 0 || a >= kNumClasses || b < 0 || b >= kNumClasses)
    throw std::invalid_argument("swap_pair: class index out of range");
  std::swap(perm.map[static_cast<std::size_t>(a)], perm.map[static_cast<std::size_t>(b)]);
  return perm;
}

inline LabelPermutation identity_permutation() { return LabelPermutation::identity(); }

inline int relabel(int label, const LabelPermutation& perm) { return perm.relabel(label); }

}  // namespace homeostat
