#include "coastflow/errors.hpp"
#include "coastflow/rng.hpp"

#include "ufno_internal.hpp"

#include <cmath>
#include <string>

namespace coastflow::ufno {

using namespace detail;

// ---------------------------------------------------------------------------
// Config validation
// ---------------------------------------------------------------------------

void UfnoConfig::validate_for(Index nz, Index nx, Index nt) const {
    if (width < 1) throw ConfigError("ufno.width must be >= 1");
    if (n_fourier < 0 || n_ufourier < 0) throw ConfigError("ufno layer counts must be >= 0");
    if (proj_hidden < 1) throw ConfigError("ufno.proj_hidden must be >= 1");
    if (pad_z < 0 || pad_x < 0 || pad_t < 0) throw ConfigError("ufno padding must be >= 0");
    const Index pz = nz + pad_z, px = nx + pad_x, pt = nt + pad_t;
    if (modes_z < 1 || modes_z > pz)
        throw ConfigError("ufno.modes_z must lie in [1, padded z size " + std::to_string(pz) + "]");
    if (modes_x < 1 || modes_x > px)
        throw ConfigError("ufno.modes_x must lie in [1, padded x size " + std::to_string(px) + "]");
    if (modes_t < 1 || modes_t > pt / 2 + 1)
        throw ConfigError("ufno.modes_t must lie in [1, " + std::to_string(pt / 2 + 1) +
                          "] (real-FFT axis of padded t size " + std::to_string(pt) + ")");
    if (n_ufourier > 0 && (pz % 4 || px % 4 || pt % 4))
        throw ConfigError("padded dims must be divisible by 4 for the U-Net blocks (got " +
                          std::to_string(pz) + "x" + std::to_string(px) + "x" + std::to_string(pt) +
                          ")");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must be in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
    if (!(lambda_active >= 0.0)) throw ConfigError("train.lambda_active must be >= 0");
    if (!(val_split >= 0.0 && val_split < 1.0)) throw ConfigError("train.val_split must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

void ConvWeights::init(Index ch) {
    for (auto& m : w) m = Matrix::Zero(ch, ch);
    b = Vector::Zero(ch);
}

UfnoParams UfnoParams::zeros(const UfnoConfig& cfg) {
    UfnoParams p;
    p.lift_w = Matrix::Zero(cfg.width, cfg.in_channels());
    p.lift_b = Vector::Zero(cfg.width);
    p.layers.resize(static_cast<size_t>(cfg.n_layers()));
    for (Index i = 0; i < cfg.n_layers(); ++i) {
        auto& l = p.layers[static_cast<size_t>(i)];
        l.spectral = CVector::Zero(cfg.n_modes() * cfg.width * cfg.width);
        l.w = Matrix::Zero(cfg.width, cfg.width);
        l.b = Vector::Zero(cfg.width);
        l.has_unet = i >= cfg.n_fourier;
        if (l.has_unet) {
            l.unet.enc1.init(cfg.width);
            l.unet.enc2.init(cfg.width);
            l.unet.dec1.init(cfg.width);
            l.unet.dec2.init(cfg.width);
        }
    }
    p.proj1_w = Matrix::Zero(cfg.proj_hidden, cfg.width);
    p.proj1_b = Vector::Zero(cfg.proj_hidden);
    p.proj2_w = Matrix::Zero(1, cfg.proj_hidden);
    p.proj2_b = Vector::Zero(1);
    return p;
}

namespace {

void fill_normal(Rng& rng, double scale, double* data, Index n) {
    for (Index i = 0; i < n; ++i) data[i] = scale * rng.normal();
}

} // namespace

UfnoParams UfnoParams::random_init(const UfnoConfig& cfg, std::uint64_t seed) {
    UfnoParams p = zeros(cfg);
    Rng rng(seed);
    const auto glorot = [](Index fan_in, Index fan_out) {
        return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    };
    fill_normal(rng, glorot(cfg.in_channels(), cfg.width), p.lift_w.data(), p.lift_w.size());
    const double spectral_scale = 1.0 / static_cast<double>(cfg.width * cfg.width);
    const double conv_scale = std::sqrt(2.0 / static_cast<double>(27 * cfg.width));
    for (auto& l : p.layers) {
        for (Index i = 0; i < l.spectral.size(); ++i)
            l.spectral(i) = Complex(spectral_scale * rng.uniform(), spectral_scale * rng.uniform());
        fill_normal(rng, glorot(cfg.width, cfg.width), l.w.data(), l.w.size());
        if (l.has_unet) {
            for (ConvWeights* cw : {&l.unet.enc1, &l.unet.enc2, &l.unet.dec1, &l.unet.dec2})
                for (auto& m : cw->w) fill_normal(rng, conv_scale, m.data(), m.size());
        }
    }
    fill_normal(rng, glorot(cfg.width, cfg.proj_hidden), p.proj1_w.data(), p.proj1_w.size());
    fill_normal(rng, glorot(cfg.proj_hidden, 1), p.proj2_w.data(), p.proj2_w.size());
    return p;
}

namespace {

template <typename P, typename F>
void visit_spans(P& p, F&& f) {
    f(p.lift_w.data(), p.lift_w.size());
    f(p.lift_b.data(), p.lift_b.size());
    for (auto& l : p.layers) {
        f(reinterpret_cast<decltype(p.lift_w.data())>(l.spectral.data()), 2 * l.spectral.size());
        f(l.w.data(), l.w.size());
        f(l.b.data(), l.b.size());
        if (l.has_unet) {
            for (auto* cw : {&l.unet.enc1, &l.unet.enc2, &l.unet.dec1, &l.unet.dec2}) {
                for (auto& m : cw->w) f(m.data(), m.size());
                f(cw->b.data(), cw->b.size());
            }
        }
    }
    f(p.proj1_w.data(), p.proj1_w.size());
    f(p.proj1_b.data(), p.proj1_b.size());
    f(p.proj2_w.data(), p.proj2_w.size());
    f(p.proj2_b.data(), p.proj2_b.size());
}

} // namespace

void for_each_span(UfnoParams& p, const std::function<void(double*, Index)>& f) {
    visit_spans(p, f);
}
void for_each_span(const UfnoParams& p, const std::function<void(const double*, Index)>& f) {
    visit_spans(p, f);
}

Index UfnoParams::n_scalars() const {
    Index total = 0;
    for_each_span(*this, [&](const double*, Index n) { total += n; });
    return total;
}

Vector flatten(const UfnoParams& p) {
    Vector flat(p.n_scalars());
    Index off = 0;
    for_each_span(p, [&](const double* d, Index n) {
        flat.segment(off, n) = Eigen::Map<const Vector>(d, n);
        off += n;
    });
    return flat;
}

void unflatten(const Vector& flat, UfnoParams& p) {
    Index off = 0;
    for_each_span(p, [&](double* d, Index n) {
        Eigen::Map<Vector>(d, n) = flat.segment(off, n);
        off += n;
    });
    if (off != flat.size()) throw ConfigError("unflatten: size mismatch");
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace {

Tensor4 build_input(const Vector& norm_logk, const UfnoConfig& cfg, const FieldDims& d) {
    if (norm_logk.size() != d.nz * d.nx)
        throw ConfigError("ufno input field size does not match dims");
    Tensor4 in(d.nz, d.nx, d.nt, cfg.in_channels());
    for (Index iz = 0; iz < d.nz; ++iz) {
        const double zc = (static_cast<double>(iz) + 0.5) / static_cast<double>(d.nz);
        for (Index ix = 0; ix < d.nx; ++ix) {
            const double a = norm_logk(iz * d.nx + ix); // grid flat = iz*nx + ix
            const double xc = (static_cast<double>(ix) + 0.5) / static_cast<double>(d.nx);
            for (Index it = 0; it < d.nt; ++it) {
                const double tc = (static_cast<double>(it) + 0.5) / static_cast<double>(d.nt);
                const Index base = in.flat(iz, ix, it, 0);
                in.data(base) = a;
                in.data(base + 1) = xc;
                in.data(base + 2) = zc;
                in.data(base + 3) = tc;
            }
        }
    }
    return in;
}

Tensor4 forward_impl(const Vector& norm_logk, const UfnoParams& p, const UfnoConfig& cfg,
                     const FieldDims& dims, ForwardTrace* trace) {
    cfg.validate_for(dims.nz, dims.nx, dims.nt);
    Tensor4 input = build_input(norm_logk, cfg, dims);
    Tensor4 lifted = pointwise_affine(input, p.lift_w, p.lift_b);
    Tensor4 v = pad_tensor(lifted, cfg.pad_z, cfg.pad_x, cfg.pad_t);

    const Index n_layers = cfg.n_layers();
    if (trace) {
        trace->dims = dims;
        trace->input = std::move(input);
        trace->lifted_padded = v;
        trace->layer_out.resize(static_cast<size_t>(n_layers));
        trace->unet_e1c.assign(static_cast<size_t>(n_layers), {});
        trace->unet_e2c.assign(static_cast<size_t>(n_layers), {});
        trace->unet_d1c.assign(static_cast<size_t>(n_layers), {});
        trace->unet_mid.assign(static_cast<size_t>(n_layers), {});
    }

    for (Index i = 0; i < n_layers; ++i) {
        const LayerParams& lp = p.layers[static_cast<size_t>(i)];
        Tensor4 out = spectral_conv_fwd(v, lp.spectral, cfg);
        out.by_points().noalias() += lp.w * v.by_points();
        out.by_points().colwise() += lp.b;
        if (lp.has_unet) {
            UnetTrace ut;
            out.data += unet_fwd(v, lp.unet, trace ? &ut : nullptr).data;
            if (trace) {
                trace->unet_e1c[static_cast<size_t>(i)] = std::move(ut.e1c);
                trace->unet_e2c[static_cast<size_t>(i)] = std::move(ut.e2c);
                trace->unet_d1c[static_cast<size_t>(i)] = std::move(ut.d1c);
                trace->unet_mid[static_cast<size_t>(i)] = std::move(ut.mid);
            }
        }
        relu_inplace(out);
        if (trace) trace->layer_out[static_cast<size_t>(i)] = out;
        v = std::move(out);
    }

    Tensor4 unpadded = unpad_tensor(v, cfg.pad_z, cfg.pad_x, cfg.pad_t);
    Tensor4 hidden = pointwise_affine(unpadded, p.proj1_w, p.proj1_b);
    relu_inplace(hidden);
    Tensor4 out = pointwise_affine(hidden, p.proj2_w, p.proj2_b);
    if (trace) {
        trace->unpadded = std::move(unpadded);
        trace->proj_hidden_act = std::move(hidden);
    }
    return out;
}

} // namespace

Tensor4 forward_traced(const Vector& norm_logk, const UfnoParams& params, const UfnoConfig& cfg,
                       const FieldDims& dims, ForwardTrace& trace) {
    return forward_impl(norm_logk, params, cfg, dims, &trace);
}

Tensor4 forward_normalized(const Vector& norm_logk, const UfnoParams& params, const UfnoConfig& cfg,
                           const FieldDims& dims) {
    return forward_impl(norm_logk, params, cfg, dims, nullptr);
}

Tensor4 forward(const GeoModel& model, const UfnoParams& params, const UfnoConfig& cfg,
                const Normalizer& norm, int quantity, const FieldDims& dims, const GridSpec& grid) {
    if (model.logk.size() != grid.n_cells())
        throw ConfigError("ufno::forward: model does not match the grid");
    if (grid.nz != dims.nz || grid.nx != dims.nx)
        throw ConfigError("ufno::forward: dims do not match the grid");
    Vector norm_logk = (model.logk.array() - norm.in_mean) / norm.in_std;
    Tensor4 out = forward_impl(norm_logk, params, cfg, dims, nullptr);
    out.data = out.data.array() * norm.out_std(quantity) + norm.out_mean(quantity);
    return out;
}

UfnoParams backward(const Tensor4& grad_out, const ForwardTrace& trace, const UfnoParams& params,
                    const UfnoConfig& cfg) {
    UfnoParams g = UfnoParams::zeros(cfg);

    // projection pair
    Tensor4 gh(trace.proj_hidden_act.nz, trace.proj_hidden_act.nx, trace.proj_hidden_act.nt,
               cfg.proj_hidden);
    gh.data.setZero();
    pointwise_affine_backward(grad_out, trace.proj_hidden_act, params.proj2_w, gh, g.proj2_w,
                              g.proj2_b);
    relu_backward_inplace(gh, trace.proj_hidden_act);
    Tensor4 g_unpad(trace.unpadded.nz, trace.unpadded.nx, trace.unpadded.nt, cfg.width);
    g_unpad.data.setZero();
    pointwise_affine_backward(gh, trace.unpadded, params.proj1_w, g_unpad, g.proj1_w, g.proj1_b);

    // adjoint of unpad is zero-pad
    Tensor4 gv = pad_tensor(g_unpad, cfg.pad_z, cfg.pad_x, cfg.pad_t);

    for (Index i = cfg.n_layers() - 1; i >= 0; --i) {
        const LayerParams& lp = params.layers[static_cast<size_t>(i)];
        LayerParams& gl = g.layers[static_cast<size_t>(i)];
        const Tensor4& out = trace.layer_out[static_cast<size_t>(i)];
        const Tensor4& in = i == 0 ? trace.lifted_padded : trace.layer_out[static_cast<size_t>(i - 1)];
        relu_backward_inplace(gv, out);

        Tensor4 g_in(in.nz, in.nx, in.nt, in.ch);
        g_in.data.setZero();
        spectral_conv_bwd(gv, in, lp.spectral, cfg, g_in, gl.spectral);
        pointwise_affine_backward(gv, in, lp.w, g_in, gl.w, gl.b);
        if (lp.has_unet) {
            UnetTrace ut;
            ut.e1c = trace.unet_e1c[static_cast<size_t>(i)];
            ut.e2c = trace.unet_e2c[static_cast<size_t>(i)];
            ut.d1c = trace.unet_d1c[static_cast<size_t>(i)];
            ut.mid = trace.unet_mid[static_cast<size_t>(i)];
            unet_bwd(gv, in, lp.unet, ut, g_in, gl.unet);
        }
        gv = std::move(g_in);
    }

    Tensor4 g_lift = unpad_tensor(gv, cfg.pad_z, cfg.pad_x, cfg.pad_t);
    Tensor4 g_input(trace.input.nz, trace.input.nx, trace.input.nt, cfg.in_channels());
    g_input.data.setZero();
    pointwise_affine_backward(g_lift, trace.input, params.lift_w, g_input, g.lift_w, g.lift_b);
    return g;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

double loss(const Tensor4& pred, const Tensor4& truth, const Vector& active_mask, double lambda) {
    if (!pred.same_shape(truth)) throw ConfigError("loss: shape mismatch");
    if (active_mask.size() != pred.nz * pred.nx) throw ConfigError("loss: mask size mismatch");
    double acc = 0.0;
    for (Index iz = 0; iz < pred.nz; ++iz) {
        for (Index ix = 0; ix < pred.nx; ++ix) {
            const double wcell = 1.0 + lambda * active_mask(iz * pred.nx + ix);
            const Index base = pred.flat(iz, ix, 0, 0);
            const Index run = pred.nt * pred.ch;
            acc += wcell * (pred.data.segment(base, run) - truth.data.segment(base, run))
                               .squaredNorm();
        }
    }
    return acc / static_cast<double>(pred.nt);
}

Tensor4 loss_gradient(const Tensor4& pred, const Tensor4& truth, const Vector& active_mask,
                      double lambda) {
    if (!pred.same_shape(truth)) throw ConfigError("loss_gradient: shape mismatch");
    Tensor4 g(pred.nz, pred.nx, pred.nt, pred.ch);
    const double inv_nt = 1.0 / static_cast<double>(pred.nt);
    for (Index iz = 0; iz < pred.nz; ++iz) {
        for (Index ix = 0; ix < pred.nx; ++ix) {
            const double w = 2.0 * inv_nt * (1.0 + lambda * active_mask(iz * pred.nx + ix));
            const Index base = pred.flat(iz, ix, 0, 0);
            const Index run = pred.nt * pred.ch;
            g.data.segment(base, run) =
                w * (pred.data.segment(base, run) - truth.data.segment(base, run));
        }
    }
    return g;
}

} // namespace coastflow::ufno
