#pragma once

#include "coastflow/simulator.hpp"

#include "band_matrix.hpp"

namespace coastflow::sim {

/// Factorized implicit-diffusion system; coefficients are static, so the
/// factorization is reusable for every step taken with the same dt.
struct Simulator::TransportCache {
    double dt_seconds = -1.0;
    BandMatrix mat;
};

} // namespace coastflow::sim
