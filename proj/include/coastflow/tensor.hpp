#pragma once

#include "coastflow/types.hpp"

namespace coastflow::ufno {

/// Dense rank-4 tensor with dims (nz, nx, nt, channels), row-major storage
/// (channels fastest): flat = ((iz*nx + ix)*nt + it)*ch + c.
///
/// The channel-fastest layout makes per-point channel mixes a single GEMM on
/// a (ch x n_points) column-major view and lets the FFT batch all channels
/// of one field as an interleaved many-transform.
struct Tensor4 {
    Index nz = 0, nx = 0, nt = 0, ch = 0;
    Vector data;

    Tensor4() = default;
    Tensor4(Index z, Index x, Index t, Index c) { resize(z, x, t, c); }

    void resize(Index z, Index x, Index t, Index c) {
        nz = z;
        nx = x;
        nt = t;
        ch = c;
        data = Vector::Zero(z * x * t * c);
    }

    Index n_points() const { return nz * nx * nt; }
    Index size() const { return data.size(); }

    Index flat(Index iz, Index ix, Index it, Index c) const {
        return ((iz * nx + ix) * nt + it) * ch + c;
    }
    double& at(Index iz, Index ix, Index it, Index c) { return data(flat(iz, ix, it, c)); }
    double at(Index iz, Index ix, Index it, Index c) const { return data(flat(iz, ix, it, c)); }

    /// (ch x n_points) view; column p holds the channel vector of point p.
    Eigen::Map<Matrix> by_points() { return {data.data(), ch, n_points()}; }
    Eigen::Map<const Matrix> by_points() const { return {data.data(), ch, n_points()}; }

    bool same_shape(const Tensor4& o) const {
        return nz == o.nz && nx == o.nx && nt == o.nt && ch == o.ch;
    }
};

} // namespace coastflow::ufno
