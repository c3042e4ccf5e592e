#include "fsi/assembly.hpp"

namespace fsi {

void append_block(std::vector<Triplet>& trips, const SpMat& a, int row_offset, int col_offset, double scale) {
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()) + row_offset, static_cast<int>(it.col()) + col_offset,
                         scale * it.value());
    }
  }
}

SpMat build_constrained(const std::vector<Triplet>& trips, int n, const std::vector<char>& fixed) {
  std::vector<Triplet> kept;
  kept.reserve(trips.size() + fixed.size());
  for (const auto& t : trips) {
    if (fixed[static_cast<std::size_t>(t.row())] || fixed[static_cast<std::size_t>(t.col())]) continue;
    kept.push_back(t);
  }
  for (int i = 0; i < n; ++i) {
    if (fixed[static_cast<std::size_t>(i)]) kept.emplace_back(i, i, 1.0);
  }
  SpMat m(n, n);
  m.setFromTriplets(kept.begin(), kept.end());
  return m;
}

SpMat block_diagonal(const SpMat& a, int copies) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros()) * static_cast<std::size_t>(copies));
  for (int c = 0; c < copies; ++c)
    append_block(trips, a, c * static_cast<int>(a.rows()), c * static_cast<int>(a.cols()));
  SpMat m(a.rows() * copies, a.cols() * copies);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace fsi
