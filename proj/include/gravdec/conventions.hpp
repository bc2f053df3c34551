#pragma once

// Sign conventions shared by the symbolic and numeric layers.
// Metric signature (+,-,-,-); spatial indices run 1..3.

namespace gravdec {

constexpr int eta(int mu, int nu) {
  if (mu != nu) return 0;
  return mu == 0 ? 1 : -1;
}

// Levi-Civita symbol over spatial indices 1..3 (0 outside the range).
constexpr int levi_civita(int i, int j, int k) {
  if (i < 1 || i > 3 || j < 1 || j > 3 || k < 1 || k > 3) return 0;
  if (i == j || j == k || i == k) return 0;
  // even permutations of (1,2,3)
  if ((i == 1 && j == 2) || (i == 2 && j == 3) || (i == 3 && j == 1)) return 1;
  return -1;
}

constexpr int kronecker(int i, int j) { return i == j ? 1 : 0; }

}  // namespace gravdec
