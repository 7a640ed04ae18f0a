#ifndef LTN_PARALLEL_HPP
#define LTN_PARALLEL_HPP

namespace ltn {

/// Execution policy for the data-parallel kernels. kSerial is the reference
/// implementation; kParallel runs the same per-index bodies under OpenMP.
/// Both produce bit-identical results because every index owns its RNG
/// substream and writes disjoint state.
enum class Exec { kSerial, kParallel };

template <class F>
void for_each_index(Exec exec, int n, F&& f) {
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) f(i);
  } else {
    for (int i = 0; i < n; ++i) f(i);
  }
}

}  // namespace ltn

#endif  // LTN_PARALLEL_HPP
