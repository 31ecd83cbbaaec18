#pragma once

#include "coastflow/domain.hpp"
#include "coastflow/geostat.hpp"
#include "coastflow/tensor.hpp"
#include "coastflow/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace coastflow::ufno {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Network architecture. Weight shapes depend only on this (not on the grid),
/// but the retained modes and padding must be consistent with the field
/// dimensions the network is applied to; validate_for checks that.
struct UfnoConfig {
    Index width = 12;
    Index n_fourier = 2;
    Index n_ufourier = 2;
    Index modes_z = 10, modes_x = 8, modes_t = 16; // retained modes per axis
    Index pad_z = 0, pad_x = 4, pad_t = 5;         // zero padding per axis
    Index proj_hidden = 128;
    Index coord_channels = 3; // normalized x, z, t appended before lifting

    Index in_channels() const { return 1 + coord_channels; }
    Index n_modes() const { return modes_z * modes_x * modes_t; }
    Index n_layers() const { return n_fourier + n_ufourier; }

    void validate_for(Index nz, Index nx, Index nt) const;
};

/// Field dimensions the surrogate maps over: grid (nz, nx) and nt time steps.
struct FieldDims {
    Index nz = 0, nx = 0, nt = 0;
};

struct TrainConfig {
    Index epochs = 8;
    Index batch_size = 4;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double lambda_active = 1.0; // extra weight on active cells in the loss
    double val_split = 0.1;     // fraction of the dataset held out for the val curve
    std::uint64_t seed = 1;

    void validate() const;
};

/// z-score statistics: scalar over the log-permeability input, and one pair
/// per output quantity. Stds are floored at 1e-8.
struct Normalizer {
    double in_mean = 0.0, in_std = 1.0;
    double out_mean_pressure = 0.0, out_std_pressure = 1.0;
    double out_mean_salinity = 0.0, out_std_salinity = 1.0;

    double out_mean(int quantity) const { return quantity == 0 ? out_mean_pressure : out_mean_salinity; }
    double out_std(int quantity) const { return quantity == 0 ? out_std_pressure : out_std_salinity; }
};

enum Quantity : int { kPressure = 0, kSalinity = 1 };

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// 3x3x3 channel-mixing convolution, stride 2 per axis, zero "same" padding.
/// w[tap] is (ch_out x ch_in) with tap = (dz*3 + dx)*3 + dt, offsets in
/// {-1, 0, 1}; the transposed convolutions reuse the same shape.
struct ConvWeights {
    std::array<Matrix, 27> w;
    Vector b;

    void init(Index ch);
};

/// Two-level U-Net: strided conv encoder, transposed-conv decoder, additive
/// skip at the mid level.
struct UnetWeights {
    ConvWeights enc1, enc2, dec1, dec2;
};

struct LayerParams {
    CVector spectral; // n_modes blocks of (width x width), column-major complex
    Matrix w;         // width x width pointwise mix
    Vector b;         // width
    bool has_unet = false;
    UnetWeights unet;
};

struct UfnoParams {
    Matrix lift_w; // width x in_channels
    Vector lift_b;
    std::vector<LayerParams> layers;
    Matrix proj1_w; // proj_hidden x width
    Vector proj1_b;
    Matrix proj2_w; // 1 x proj_hidden
    Vector proj2_b;

    static UfnoParams zeros(const UfnoConfig& cfg);
    static UfnoParams random_init(const UfnoConfig& cfg, std::uint64_t seed);
    Index n_scalars() const; // counting complex entries as two
};

/// Visits every parameter tensor as a raw double span (complex weights are
/// visited as interleaved re/im pairs). Iteration order is fixed; ADAM, the
/// finite-difference probes, and (de)serialization all rely on it.
void for_each_span(UfnoParams& p, const std::function<void(double*, Index)>& f);
void for_each_span(const UfnoParams& p, const std::function<void(const double*, Index)>& f);

Vector flatten(const UfnoParams& p);
void unflatten(const Vector& flat, UfnoParams& p);

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

/// Unnormalized 3D real FFT of one channel slice; output (nz, nx, nt/2+1)
/// half spectrum, row-major. irfft3 inverts with 1/N scaling.
void rfft3(const Tensor4& t, Index channel, CVector& spectrum);
void irfft3(const CVector& spectrum, Index nz, Index nx, Index nt, Tensor4& out, Index channel);

/// Per-retained-mode channel mixing in Fourier space; zero outside the
/// retained set; linear in v.
Tensor4 spectral_conv(const Tensor4& v, const CVector& weights, const UfnoConfig& cfg);

Tensor4 fourier_layer(const Tensor4& v, const LayerParams& p, const UfnoConfig& cfg);
Tensor4 u_fourier_layer(const Tensor4& v, const LayerParams& p, const UfnoConfig& cfg);
Tensor4 unet_block(const Tensor4& v, const UnetWeights& u);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

/// Saved activations of one traced forward pass (enough to replay the graph
/// in reverse; spectra are recomputed rather than stored).
struct ForwardTrace;

/// Full surrogate forward pass: normalize, broadcast over time, append
/// coordinate channels, lift, pad, Fourier and U-Fourier layers, unpad,
/// project, denormalize. Output tensor is (nz, nx, nt, 1) in physical units.
Tensor4 forward(const GeoModel& model, const UfnoParams& params, const UfnoConfig& cfg,
                const Normalizer& norm, int quantity, const FieldDims& dims,
                const GridSpec& grid);

/// As forward(), but on a pre-normalized input field and without the final
/// denormalization; records the trace for backward().
Tensor4 forward_traced(const Vector& norm_logk, const UfnoParams& params, const UfnoConfig& cfg,
                       const FieldDims& dims, ForwardTrace& trace);

/// Evaluation-only variant of forward_traced (no trace kept).
Tensor4 forward_normalized(const Vector& norm_logk, const UfnoParams& params, const UfnoConfig& cfg,
                           const FieldDims& dims);

/// Exact reverse-mode gradients of the traced graph for every parameter.
/// grad_out is the loss gradient w.r.t. the traced (normalized) output.
UfnoParams backward(const Tensor4& grad_out, const ForwardTrace& trace, const UfnoParams& params,
                    const UfnoConfig& cfg);

struct ForwardTrace {
    FieldDims dims;
    Tensor4 input;               // lifted-input source (in_channels)
    Tensor4 lifted_padded;       // v0 after lifting and padding
    std::vector<Tensor4> layer_out; // output of each Fourier/U-Fourier layer
    // U-Net internals per layer (empty for plain Fourier layers)
    std::vector<Tensor4> unet_e1c, unet_e2c, unet_d1c, unet_mid;
    Tensor4 unpadded;            // after unpad
    Tensor4 proj_hidden_act;     // ReLU(Q1 ...)
};

/// Weighted squared-error of Eq-style form: per (sample, time) the cell sum
/// of squared error plus lambda times the active-cell sum, averaged over
/// times (and over samples by the caller). pred/truth are (nz, nx, nt, 1);
/// active is a 0/1 field over (nz, nx).
double loss(const Tensor4& pred, const Tensor4& truth, const Vector& active_mask, double lambda);

/// d loss / d pred for the same expression.
Tensor4 loss_gradient(const Tensor4& pred, const Tensor4& truth, const Vector& active_mask,
                      double lambda);

// ---------------------------------------------------------------------------
// Optimizer & training
// ---------------------------------------------------------------------------

struct AdamState {
    UfnoParams m, v;
    static AdamState zeros(const UfnoConfig& cfg);
};

/// Standard bias-corrected ADAM update, t >= 1.
void adam_step(UfnoParams& theta, const UfnoParams& grads, AdamState& state, Index t,
               const TrainConfig& cfg);

/// One training member: raw log-permeability field plus the output series
/// restricted to active cells (n_active x nt).
struct Sample {
    Vector logk;   // full grid, nz*nx
    Matrix series; // n_active x nt, physical units
};

struct Dataset {
    FieldDims dims;
    std::vector<int> active_cells; // flat grid index per active row of series
    Vector active_mask;            // nz*nx, 0/1
    std::vector<Sample> samples;
};

Normalizer fit_normalizer_input(const Dataset& ds);
/// Output stats for one quantity over a dataset (mean/std over every entry).
void fit_normalizer_output(const Dataset& ds, int quantity, Normalizer& norm);

struct EpochLog {
    Index epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    UfnoParams params;
    std::vector<EpochLog> log;
};

/// Mini-batch ADAM over the dataset; deterministic given cfg.seed (fixed
/// shuffle sequence and serial gradient reduction). Throws TrainingError on
/// a non-finite loss, reporting epoch, batch and max |grad|.
TrainResult train(const Dataset& ds, const Normalizer& norm, int quantity, const TrainConfig& tc,
                  const UfnoConfig& uc);

/// Embeds an active-cell column of a series into a full (nz, nx, nt, 1)
/// tensor with zeros elsewhere, normalized by (mean, std).
Tensor4 embed_series(const Matrix& series, const std::vector<int>& active_cells,
                     const FieldDims& dims, double mean, double inv_std);

} // namespace coastflow::ufno
