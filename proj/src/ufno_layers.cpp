#include "coastflow/errors.hpp"
#include "coastflow/fft.hpp"

#include "ufno_internal.hpp"

#include <cstring>

namespace coastflow::ufno {

using namespace detail;

// ---------------------------------------------------------------------------
// Pointwise ops
// ---------------------------------------------------------------------------

namespace coastflow_detail {} // keep clang-format quiet

Tensor4 detail::pointwise_affine(const Tensor4& in, const Matrix& w, const Vector& b) {
    Tensor4 out(in.nz, in.nx, in.nt, w.rows());
    out.by_points().noalias() = w * in.by_points();
    out.by_points().colwise() += b;
    return out;
}

void detail::pointwise_affine_backward(const Tensor4& grad_out, const Tensor4& in, const Matrix& w,
                                       Tensor4& grad_in_accum, Matrix& grad_w, Vector& grad_b) {
    grad_in_accum.by_points().noalias() += w.transpose() * grad_out.by_points();
    grad_w.noalias() += grad_out.by_points() * in.by_points().transpose();
    grad_b.noalias() += grad_out.by_points().rowwise().sum();
}

void detail::relu_inplace(Tensor4& t) { t.data = t.data.cwiseMax(0.0); }

void detail::relu_backward_inplace(Tensor4& grad, const Tensor4& out) {
    grad.data.array() *= (out.data.array() > 0.0).cast<double>();
}

Tensor4 detail::pad_tensor(const Tensor4& in, Index pz, Index px, Index pt) {
    Tensor4 out(in.nz + pz, in.nx + px, in.nt + pt, in.ch);
    const Index run = in.nt * in.ch;
    for (Index iz = 0; iz < in.nz; ++iz)
        for (Index ix = 0; ix < in.nx; ++ix)
            std::memcpy(out.data.data() + out.flat(iz, ix, 0, 0),
                        in.data.data() + in.flat(iz, ix, 0, 0), sizeof(double) * run);
    return out;
}

Tensor4 detail::unpad_tensor(const Tensor4& in, Index pz, Index px, Index pt) {
    Tensor4 out(in.nz - pz, in.nx - px, in.nt - pt, in.ch);
    const Index run = out.nt * out.ch;
    for (Index iz = 0; iz < out.nz; ++iz)
        for (Index ix = 0; ix < out.nx; ++ix)
            std::memcpy(out.data.data() + out.flat(iz, ix, 0, 0),
                        in.data.data() + in.flat(iz, ix, 0, 0), sizeof(double) * run);
    return out;
}

// ---------------------------------------------------------------------------
// Spectral convolution
// ---------------------------------------------------------------------------

Tensor4 detail::spectral_conv_fwd(const Tensor4& v, const CVector& weights, const UfnoConfig& cfg) {
    const Index nz = v.nz, nx = v.nx, nt = v.nt, ch = v.ch;
    const Index nth = nt / 2 + 1;
    if (ch != cfg.width) throw ConfigError("spectral_conv: channel count does not match width");
    if (weights.size() != cfg.n_modes() * ch * ch)
        throw ConfigError("spectral_conv: weight size does not match modes/width");

    CVector xh(nz * nx * nth * ch);
    fft::r2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt),
              static_cast<int>(ch), v.data.data(), xh.data());

    CVector yfull = CVector::Zero(nz * nx * nt * ch);
    Eigen::VectorXcd yv(ch);
    for (Index jz = 0; jz < cfg.modes_z; ++jz) {
        const Index kz = axis_index(jz, cfg.modes_z, nz);
        for (Index jx = 0; jx < cfg.modes_x; ++jx) {
            const Index kx = axis_index(jx, cfg.modes_x, nx);
            for (Index jt = 0; jt < cfg.modes_t; ++jt) {
                const Index kt = jt;
                const Index mode = (jz * cfg.modes_x + jx) * cfg.modes_t + jt;
                Eigen::Map<const Eigen::MatrixXcd> r(weights.data() + mode * ch * ch, ch, ch);
                Eigen::Map<const Eigen::VectorXcd> xv(xh.data() + ((kz * nx + kx) * nth + kt) * ch,
                                                      ch);
                yv.noalias() = r * xv;
                Eigen::Map<Eigen::VectorXcd>(yfull.data() + ((kz * nx + kx) * nt + kt) * ch, ch) =
                    yv;
                if (kt != 0 && 2 * kt != nt) {
                    const Index mz = (nz - kz) % nz, mx = (nx - kx) % nx, mt = nt - kt;
                    Eigen::Map<Eigen::VectorXcd>(yfull.data() + ((mz * nx + mx) * nt + mt) * ch,
                                                 ch) = yv.conjugate();
                }
            }
        }
    }

    CVector yt(nz * nx * nt * ch);
    fft::c2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt),
              static_cast<int>(ch), yfull.data(), yt.data(), +1);
    Tensor4 out(nz, nx, nt, ch);
    const double inv_n = 1.0 / static_cast<double>(nz * nx * nt);
    for (Index i = 0; i < out.size(); ++i) out.data(i) = yt(i).real() * inv_n;
    return out;
}

void detail::spectral_conv_bwd(const Tensor4& grad_out, const Tensor4& v_saved,
                               const CVector& weights, const UfnoConfig& cfg, Tensor4& grad_v_accum,
                               CVector& grad_weights) {
    const Index nz = v_saved.nz, nx = v_saved.nx, nt = v_saved.nt, ch = v_saved.ch;
    const Index nth = nt / 2 + 1;
    const double inv_n = 1.0 / static_cast<double>(nz * nx * nt);

    CVector ybar(nz * nx * nth * ch);
    fft::r2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt),
              static_cast<int>(ch), grad_out.data.data(), ybar.data());
    CVector xh(nz * nx * nth * ch);
    fft::r2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt),
              static_cast<int>(ch), v_saved.data.data(), xh.data());

    CVector xbar = CVector::Zero(nz * nx * nt * ch);
    for (Index jz = 0; jz < cfg.modes_z; ++jz) {
        const Index kz = axis_index(jz, cfg.modes_z, nz);
        for (Index jx = 0; jx < cfg.modes_x; ++jx) {
            const Index kx = axis_index(jx, cfg.modes_x, nx);
            for (Index jt = 0; jt < cfg.modes_t; ++jt) {
                const Index kt = jt;
                const Index mode = (jz * cfg.modes_x + jx) * cfg.modes_t + jt;
                const bool mirrored = (kt != 0 && 2 * kt != nt);
                const double factor = (mirrored ? 2.0 : 1.0) * inv_n;
                Eigen::Map<const Eigen::MatrixXcd> r(weights.data() + mode * ch * ch, ch, ch);
                Eigen::Map<const Eigen::VectorXcd> xv(xh.data() + ((kz * nx + kx) * nth + kt) * ch,
                                                      ch);
                Eigen::Map<const Eigen::VectorXcd> yb(ybar.data() + ((kz * nx + kx) * nth + kt) * ch,
                                                      ch);
                Eigen::Map<Eigen::MatrixXcd> gw(grad_weights.data() + mode * ch * ch, ch, ch);
                gw.noalias() += factor * (yb * xv.adjoint());
                Eigen::Map<Eigen::VectorXcd> xb(xbar.data() + ((kz * nx + kx) * nt + kt) * ch, ch);
                xb.noalias() = inv_n * (r.adjoint() * yb);
                if (mirrored) {
                    const Index mz = (nz - kz) % nz, mx = (nx - kx) % nx, mt = nt - kt;
                    Eigen::Map<Eigen::VectorXcd>(xbar.data() + ((mz * nx + mx) * nt + mt) * ch, ch) =
                        xb.conjugate();
                }
            }
        }
    }

    CVector xt(nz * nx * nt * ch);
    fft::c2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt),
              static_cast<int>(ch), xbar.data(), xt.data(), +1);
    for (Index i = 0; i < grad_v_accum.size(); ++i) grad_v_accum.data(i) += xt(i).real();
}

// ---------------------------------------------------------------------------
// Strided convolutions (im2col + GEMM)
// ---------------------------------------------------------------------------

namespace {

// col(tap*ch + c, p) = in(2*oz+dz-1, 2*ox+dx-1, 2*ot+dt-1, c) for coarse
// point p = (oz*ax + ox)*at + ot, zero outside the fine box.
void im2col_s2(const Tensor4& in, Matrix& col) {
    const Index az = in.nz / 2, ax = in.nx / 2, at = in.nt / 2, ch = in.ch;
    col.resize(27 * ch, az * ax * at);
    col.setZero();
    for (Index dz = 0; dz < 3; ++dz) {
        for (Index dx = 0; dx < 3; ++dx) {
            for (Index dt = 0; dt < 3; ++dt) {
                const Index tap = (dz * 3 + dx) * 3 + dt;
                for (Index oz = 0; oz < az; ++oz) {
                    const Index fz = 2 * oz + dz - 1;
                    if (fz < 0 || fz >= in.nz) continue;
                    for (Index ox = 0; ox < ax; ++ox) {
                        const Index fx = 2 * ox + dx - 1;
                        if (fx < 0 || fx >= in.nx) continue;
                        for (Index ot = 0; ot < at; ++ot) {
                            const Index ft = 2 * ot + dt - 1;
                            if (ft < 0 || ft >= in.nt) continue;
                            col.col((oz * ax + ox) * at + ot).segment(tap * ch, ch) =
                                in.data.segment(in.flat(fz, fx, ft, 0), ch);
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of im2col_s2: scatter-add col back into the fine grid.
void col2im_s2(const Matrix& col, Tensor4& fine) {
    const Index az = fine.nz / 2, ax = fine.nx / 2, at = fine.nt / 2, ch = fine.ch;
    for (Index dz = 0; dz < 3; ++dz) {
        for (Index dx = 0; dx < 3; ++dx) {
            for (Index dt = 0; dt < 3; ++dt) {
                const Index tap = (dz * 3 + dx) * 3 + dt;
                for (Index oz = 0; oz < az; ++oz) {
                    const Index fz = 2 * oz + dz - 1;
                    if (fz < 0 || fz >= fine.nz) continue;
                    for (Index ox = 0; ox < ax; ++ox) {
                        const Index fx = 2 * ox + dx - 1;
                        if (fx < 0 || fx >= fine.nx) continue;
                        for (Index ot = 0; ot < at; ++ot) {
                            const Index ft = 2 * ot + dt - 1;
                            if (ft < 0 || ft >= fine.nt) continue;
                            fine.data.segment(fine.flat(fz, fx, ft, 0), ch) +=
                                col.col((oz * ax + ox) * at + ot).segment(tap * ch, ch);
                        }
                    }
                }
            }
        }
    }
}

Matrix flat_weights(const ConvWeights& w) {
    const Index ch = w.b.size();
    Matrix wf(ch, 27 * ch);
    for (Index tap = 0; tap < 27; ++tap) wf.middleCols(tap * ch, ch) = w.w[static_cast<size_t>(tap)];
    return wf;
}

} // namespace

Tensor4 detail::conv_s2_raw(const Tensor4& in, const ConvWeights& w) {
    if (in.nz % 2 || in.nx % 2 || in.nt % 2)
        throw ConfigError("strided convolution requires even dims");
    const Index ch = in.ch;
    thread_local Matrix col;
    im2col_s2(in, col);
    Tensor4 out(in.nz / 2, in.nx / 2, in.nt / 2, ch);
    out.by_points().noalias() = flat_weights(w) * col;
    return out;
}

Tensor4 detail::conv_s2_adjoint_data(const Tensor4& coarse, const ConvWeights& w) {
    const Index ch = coarse.ch;
    thread_local Matrix col;
    col.resize(27 * ch, coarse.n_points());
    col.noalias() = flat_weights(w).transpose() * coarse.by_points();
    Tensor4 fine(coarse.nz * 2, coarse.nx * 2, coarse.nt * 2, ch);
    col2im_s2(col, fine);
    return fine;
}

void detail::conv_s2_grad_w(const Tensor4& in_fine, const Tensor4& grad_coarse,
                            ConvWeights& grad_w) {
    const Index ch = in_fine.ch;
    thread_local Matrix col;
    im2col_s2(in_fine, col);
    thread_local Matrix gw_flat;
    gw_flat.resize(ch, 27 * ch);
    gw_flat.noalias() = grad_coarse.by_points() * col.transpose();
    for (Index tap = 0; tap < 27; ++tap)
        grad_w.w[static_cast<size_t>(tap)] += gw_flat.middleCols(tap * ch, ch);
}

// ---------------------------------------------------------------------------
// U-Net block
// ---------------------------------------------------------------------------

Tensor4 detail::unet_fwd(const Tensor4& v, const UnetWeights& u, UnetTrace* trace) {
    if (v.nz % 4 || v.nx % 4 || v.nt % 4)
        throw ConfigError("unet_block requires dims divisible by 4 (padded dims are " +
                          std::to_string(v.nz) + "x" + std::to_string(v.nx) + "x" +
                          std::to_string(v.nt) + ")");
    Tensor4 e1c = conv_s2_raw(v, u.enc1);
    e1c.by_points().colwise() += u.enc1.b;
    Tensor4 e1 = e1c;
    relu_inplace(e1);

    Tensor4 e2c = conv_s2_raw(e1, u.enc2);
    e2c.by_points().colwise() += u.enc2.b;
    Tensor4 e2 = e2c;
    relu_inplace(e2);

    Tensor4 d1c = conv_s2_adjoint_data(e2, u.dec1);
    d1c.by_points().colwise() += u.dec1.b;

    Tensor4 mid = d1c;
    mid.data += e1c.data; // additive skip, pre-activation
    Tensor4 mid_act = mid;
    relu_inplace(mid_act);

    Tensor4 out = conv_s2_adjoint_data(mid_act, u.dec2);
    out.by_points().colwise() += u.dec2.b;

    if (trace) {
        trace->e1c = std::move(e1c);
        trace->e2c = std::move(e2c);
        trace->d1c = std::move(d1c);
        trace->mid = std::move(mid);
    }
    return out;
}

void detail::unet_bwd(const Tensor4& grad_out, const Tensor4& v_saved, const UnetWeights& u,
                      const UnetTrace& trace, Tensor4& grad_v_accum, UnetWeights& grad_u) {
    // out = dec2^T(relu(mid)) + b
    Tensor4 mid_act = trace.mid;
    relu_inplace(mid_act);
    grad_u.dec2.b += grad_out.by_points().rowwise().sum();
    conv_s2_grad_w(grad_out, mid_act, grad_u.dec2); // adjoint map: roles swapped
    Tensor4 g_mid = conv_s2_raw(grad_out, u.dec2);
    relu_backward_inplace(g_mid, mid_act);

    // mid = d1c + e1c
    Tensor4 g_e1c = g_mid; // via skip
    // d1c = dec1^T(e2) + b
    Tensor4 e2 = trace.e2c;
    relu_inplace(e2);
    grad_u.dec1.b += g_mid.by_points().rowwise().sum();
    conv_s2_grad_w(g_mid, e2, grad_u.dec1);
    Tensor4 g_e2 = conv_s2_raw(g_mid, u.dec1);
    relu_backward_inplace(g_e2, e2);

    // e2c = enc2(e1) + b
    Tensor4 e1 = trace.e1c;
    relu_inplace(e1);
    grad_u.enc2.b += g_e2.by_points().rowwise().sum();
    conv_s2_grad_w(e1, g_e2, grad_u.enc2);
    Tensor4 g_e1 = conv_s2_adjoint_data(g_e2, u.enc2);
    relu_backward_inplace(g_e1, e1);
    g_e1.data += g_e1c.data;

    // e1c = enc1(v) + b
    grad_u.enc1.b += g_e1.by_points().rowwise().sum();
    conv_s2_grad_w(v_saved, g_e1, grad_u.enc1);
    grad_v_accum.data += conv_s2_adjoint_data(g_e1, u.enc1).data;
}

// ---------------------------------------------------------------------------
// Public layer wrappers
// ---------------------------------------------------------------------------

void rfft3(const Tensor4& t, Index channel, CVector& spectrum) {
    if (channel < 0 || channel >= t.ch) throw ConfigError("rfft3: channel out of range");
    const Index nth = t.nt / 2 + 1;
    Vector slice(t.n_points());
    Index k = 0;
    for (Index iz = 0; iz < t.nz; ++iz)
        for (Index ix = 0; ix < t.nx; ++ix)
            for (Index it = 0; it < t.nt; ++it) slice(k++) = t.at(iz, ix, it, channel);
    spectrum.resize(t.nz * t.nx * nth);
    fft::r2c3(static_cast<int>(t.nz), static_cast<int>(t.nx), static_cast<int>(t.nt), 1,
              slice.data(), spectrum.data());
}

void irfft3(const CVector& spectrum, Index nz, Index nx, Index nt, Tensor4& out, Index channel) {
    const Index nth = nt / 2 + 1;
    if (spectrum.size() != nz * nx * nth) throw ConfigError("irfft3: spectrum size mismatch");
    if (out.nz != nz || out.nx != nx || out.nt != nt)
        throw ConfigError("irfft3: output tensor shape mismatch");
    // Hermitian extension of the stored half, then a full inverse transform.
    CVector full(nz * nx * nt);
    for (Index kz = 0; kz < nz; ++kz) {
        for (Index kx = 0; kx < nx; ++kx) {
            for (Index kt = 0; kt < nt; ++kt) {
                if (kt < nth) {
                    full((kz * nx + kx) * nt + kt) = spectrum((kz * nx + kx) * nth + kt);
                } else {
                    const Index mz = (nz - kz) % nz, mx = (nx - kx) % nx, mt = nt - kt;
                    full((kz * nx + kx) * nt + kt) =
                        std::conj(spectrum((mz * nx + mx) * nth + mt));
                }
            }
        }
    }
    CVector inv(nz * nx * nt);
    fft::c2c3(static_cast<int>(nz), static_cast<int>(nx), static_cast<int>(nt), 1, full.data(),
              inv.data(), +1);
    const double inv_n = 1.0 / static_cast<double>(nz * nx * nt);
    Index k = 0;
    for (Index iz = 0; iz < nz; ++iz)
        for (Index ix = 0; ix < nx; ++ix)
            for (Index it = 0; it < nt; ++it) out.at(iz, ix, it, channel) = inv(k++).real() * inv_n;
}

Tensor4 spectral_conv(const Tensor4& v, const CVector& weights, const UfnoConfig& cfg) {
    return detail::spectral_conv_fwd(v, weights, cfg);
}

Tensor4 fourier_layer(const Tensor4& v, const LayerParams& p, const UfnoConfig& cfg) {
    Tensor4 out = detail::spectral_conv_fwd(v, p.spectral, cfg);
    out.by_points().noalias() += p.w * v.by_points();
    out.by_points().colwise() += p.b;
    detail::relu_inplace(out);
    return out;
}

Tensor4 u_fourier_layer(const Tensor4& v, const LayerParams& p, const UfnoConfig& cfg) {
    Tensor4 out = detail::spectral_conv_fwd(v, p.spectral, cfg);
    out.by_points().noalias() += p.w * v.by_points();
    out.by_points().colwise() += p.b;
    out.data += detail::unet_fwd(v, p.unet, nullptr).data;
    detail::relu_inplace(out);
    return out;
}

Tensor4 unet_block(const Tensor4& v, const UnetWeights& u) { return detail::unet_fwd(v, u, nullptr); }

} // namespace coastflow::ufno
