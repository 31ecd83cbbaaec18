#pragma once

#include "coastflow/types.hpp"

namespace coastflow::fft {

/// Batched 3D complex transform over `howmany` interleaved signals:
/// element (i0, i1, i2) of signal c sits at ((i0*n1 + i1)*n2 + i2)*howmany + c.
/// sign = -1 is the forward transform (e^{-i...}), +1 the backward one;
/// both are unnormalized. src and dst must be distinct.
void c2c3(int n0, int n1, int n2, int howmany, const Complex* src, Complex* dst, int sign);

/// Batched 3D real-to-complex transform with the same interleaving; each real
/// signal (n0, n1, n2) maps to a half spectrum (n0, n1, n2/2 + 1), unnormalized.
void r2c3(int n0, int n1, int n2, int howmany, const double* src, Complex* dst);

/// Frees all cached plans (optional; mainly for leak-checking runs).
void clear_plan_cache();

} // namespace coastflow::fft
