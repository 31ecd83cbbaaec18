#pragma once

#include "coastflow/ufno.hpp"

namespace coastflow::ufno::detail {

/// Retained-mode index on an axis of length n: the m lowest-|frequency|
/// bins, low positive half first, then the mirrored negative half.
inline Index axis_index(Index j, Index m, Index n) {
    const Index h = (m + 1) / 2;
    return j < h ? j : n - m + j;
}

// Pointwise channel mixing out = W*in + b and its adjoints.
Tensor4 pointwise_affine(const Tensor4& in, const Matrix& w, const Vector& b);
void pointwise_affine_backward(const Tensor4& grad_out, const Tensor4& in, const Matrix& w,
                               Tensor4& grad_in_accum, Matrix& grad_w, Vector& grad_b);

void relu_inplace(Tensor4& t);
/// grad *= 1[out > 0]
void relu_backward_inplace(Tensor4& grad, const Tensor4& out);

Tensor4 pad_tensor(const Tensor4& in, Index pz, Index px, Index pt);
Tensor4 unpad_tensor(const Tensor4& in, Index pz, Index px, Index pt);

Tensor4 spectral_conv_fwd(const Tensor4& v, const CVector& weights, const UfnoConfig& cfg);
void spectral_conv_bwd(const Tensor4& grad_out, const Tensor4& v_saved, const CVector& weights,
                       const UfnoConfig& cfg, Tensor4& grad_v_accum, CVector& grad_weights);

// Stride-2 3x3x3 convolution kernels (bias handled by callers).
Tensor4 conv_s2_raw(const Tensor4& in, const ConvWeights& w);              // fine -> coarse
Tensor4 conv_s2_adjoint_data(const Tensor4& coarse, const ConvWeights& w); // coarse -> fine
void conv_s2_grad_w(const Tensor4& in_fine, const Tensor4& grad_coarse, ConvWeights& grad_w);

struct UnetTrace {
    Tensor4 e1c, e2c, d1c, mid; // pre-activation encoder levels, decoder level, skip sum
};

Tensor4 unet_fwd(const Tensor4& v, const UnetWeights& u, UnetTrace* trace);
void unet_bwd(const Tensor4& grad_out, const Tensor4& v_saved, const UnetWeights& u,
              const UnetTrace& trace, Tensor4& grad_v_accum, UnetWeights& grad_u);

} // namespace coastflow::ufno::detail
