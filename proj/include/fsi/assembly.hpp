#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <vector>

#include "fsi/parallel.hpp"

namespace fsi {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Element loop: local matrices are computed in parallel into per-cell slots
/// and scattered serially in cell order, so the assembled matrix does not
/// depend on the thread count.
template <int NI, int NJ>
SpMat assemble_cells(int rows, int cols, std::size_t ncells,
                     const std::function<std::array<int, NI>(std::size_t)>& row_dofs,
                     const std::function<std::array<int, NJ>(std::size_t)>& col_dofs,
                     const std::function<void(std::size_t, Eigen::Matrix<double, NI, NJ>&)>& local) {
  std::vector<Eigen::Matrix<double, NI, NJ>> blocks(ncells);
  parallel_for(ncells, [&](std::size_t c) {
    blocks[c].setZero();
    local(c, blocks[c]);
  });
  std::vector<Triplet> trips;
  trips.reserve(ncells * NI * NJ);
  for (std::size_t c = 0; c < ncells; ++c) {
    const auto r = row_dofs(c);
    const auto k = col_dofs(c);
    for (int i = 0; i < NI; ++i) {
      for (int j = 0; j < NJ; ++j) {
        trips.emplace_back(r[static_cast<std::size_t>(i)], k[static_cast<std::size_t>(j)], blocks[c](i, j));
      }
    }
  }
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

/// Block-diagonal matrix with `copies` copies of a scalar operator; matches
/// the component-blocked layout of vector fields.
SpMat block_diagonal(const SpMat& a, int copies);

/// Scatters `a` into a larger matrix at the given offsets.
void append_block(std::vector<Triplet>& trips, const SpMat& a, int row_offset, int col_offset, double scale = 1.0);

/// Square matrix from triplets with rows and columns of fixed unknowns
/// replaced by identity (homogeneous Dirichlet elimination that keeps symmetry).
SpMat build_constrained(const std::vector<Triplet>& trips, int n, const std::vector<char>& fixed);

}  // namespace fsi
