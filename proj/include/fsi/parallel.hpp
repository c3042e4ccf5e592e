#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fsi {

/// Worker count: FSI_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

/// Calls body(i) for i in [0, n). Each index must write only its own output
/// slot; the partition into threads never changes results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic sum of term(i) over [0, n). Terms are grouped into fixed-size
/// chunks (independent of the thread count) whose partial sums are added in
/// chunk order, so the result is bit-identical for any FSI_THREADS.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term);

}  // namespace fsi
