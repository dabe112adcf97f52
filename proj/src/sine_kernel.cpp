// Compiled with -ffast-math -fopenmp-simd so glibc's vector math routines
// are used for the loops below. Nothing else belongs in this file.
#include <cmath>
#include <cstddef>

#include "eoren/siren.hpp"

namespace eoren::detail {

void scaled_sin_cos(const double* z, std::size_t n, double omega, double* s,
                    double* c) noexcept {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sin(omega * z[i]);
  }
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = std::cos(omega * z[i]);
  }
}

}  // namespace eoren::detail
