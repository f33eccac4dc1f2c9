#pragma once

#include "accum/rng.hpp"

namespace accum {

/// Exact draw from the Polya-Gamma PG(1, z) law by the alternating-series
/// accept/reject method on the Jacobi representation (truncation point 0.64).
/// E[PG(1, z)] = tanh(z / 2) / (2 z), and the law depends on z only through |z|.
double sample_pg(double z, Rng& rng);

/// Mean of PG(1, z); 1/4 at z = 0.
double pg_mean(double z);

/// Variance of PG(1, z); 1/24 at z = 0.
double pg_variance(double z);

} // namespace accum
