#pragma once

// LAPACKE with std::complex as its complex types.
#include <complex>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

extern "C" void openblas_set_num_threads(int num_threads);

namespace qsm::quantum {

// Keeps BLAS single-threaded so that results do not depend on the thread count.
inline void pin_blas_threads() {
  static const bool once = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)once;
}

}  // namespace qsm::quantum
