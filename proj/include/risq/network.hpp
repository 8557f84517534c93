// SPDX-License-Identifier: Apache-2.0
//
// risq: learned joint active/passive beamforming for RIS-assisted MISO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"
#include "linkmath.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "system_config.hpp"

namespace risq {

inline constexpr int dense_layer_count = 5;
inline constexpr int norm_layer_count = 4;

// Layer widths follow from (N, M, K): 32H, 16H, 8H, 4H, H with H = N + 2KM.
struct NetworkShape {
    int n = 0;
    int m = 0;
    int k = 0;

    int hidden() const { return n + 2 * k * m; }
    int input_width() const { return 2 * n * m + 2 * n * k; }
    int output_width() const { return hidden(); }
    int precoder_width() const { return 2 * k * m; }

    std::array<int, dense_layer_count> widths() const
    {
        const int h = hidden();
        return {32 * h, 16 * h, 8 * h, 4 * h, h};
    }
    int fan_in(int layer) const { return layer == 0 ? input_width() : widths()[layer - 1]; }

    static NetworkShape of(const SystemConfig &cfg) { return {cfg.N, cfg.M, cfg.K}; }
};

// Multiplies in the dense layers behind the first one; 676 H^2 by construction.
inline long long hidden_multiply_count(const NetworkShape &s)
{
    const auto w = s.widths();
    long long total = 0;
    for (int l = 1; l < dense_layer_count; ++l)
        total += static_cast<long long>(w[l - 1]) * w[l];
    return total;
}

inline long long total_multiply_count(const NetworkShape &s)
{
    return hidden_multiply_count(s) + static_cast<long long>(s.input_width()) * s.widths()[0];
}

struct DenseLayer {
    Eigen::MatrixXd weight; // fan_in x width
    Eigen::RowVectorXd bias;
};

struct BatchNorm {
    Eigen::RowVectorXd scale;
    Eigen::RowVectorXd shift;
    Eigen::RowVectorXd running_mean;
    Eigen::RowVectorXd running_var;
};

// Trainable state. The quantizer boundaries are owned here so the optimizer
// sees them next to the dense tensors; bits and c ride along.
struct NetworkParams {
    NetworkShape shape;
    std::array<DenseLayer, dense_layer_count> dense;
    std::array<BatchNorm, norm_layer_count> norm;
    QuantizerParams quantizer;
    double momentum = 0.99;
    double epsilon = 1e-5;
    std::uint64_t version = 0; // bumped on every in-place update
};

inline NetworkParams init_params(const NetworkShape &shape, int bits, double c, Rng &rng)
{
    detail::require(shape.n >= 1 && shape.m >= 1 && shape.k >= 1, "init_params: invalid shape");
    NetworkParams p;
    p.shape = shape;
    p.quantizer = QuantizerParams::uniform(bits, c);
    p.quantizer.validate();
    const auto widths = shape.widths();
    for (int l = 0; l < dense_layer_count; ++l) {
        const int in = shape.fan_in(l);
        std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / in));
        p.dense[l].weight.resize(in, widths[l]);
        for (Eigen::Index c2 = 0; c2 < p.dense[l].weight.cols(); ++c2)
            for (Eigen::Index r = 0; r < p.dense[l].weight.rows(); ++r)
                p.dense[l].weight(r, c2) = nd(rng);
        p.dense[l].bias = Eigen::RowVectorXd::Zero(widths[l]);
    }
    for (int l = 0; l < norm_layer_count; ++l) {
        p.norm[l].scale = Eigen::RowVectorXd::Ones(widths[l]);
        p.norm[l].shift = Eigen::RowVectorXd::Zero(widths[l]);
        p.norm[l].running_mean = Eigen::RowVectorXd::Zero(widths[l]);
        p.norm[l].running_var = Eigen::RowVectorXd::Ones(widths[l]);
    }
    return p;
}

enum class Mode { training, inference };

// Intermediates cached by a forward pass for the matching backward pass.
struct ForwardTrace {
    Mode mode = Mode::inference;
    std::uint64_t version = 0;
    Eigen::Index batch = 0;
    std::array<Eigen::MatrixXd, dense_layer_count> inputs; // input of each dense layer
    std::array<Eigen::MatrixXd, norm_layer_count> xhat;
    std::array<Eigen::MatrixXd, norm_layer_count> normalized; // pre-ReLU
    std::array<Eigen::RowVectorXd, norm_layer_count> batch_mean;
    std::array<Eigen::RowVectorXd, norm_layer_count> batch_var;
    std::array<Eigen::RowVectorXd, norm_layer_count> inv_std;
};

// Raw network output, L x H: columns [Re W | Im W | phi_cont]. Precoder entry
// (m, k) sits at column k*M + m of each half.
struct NetworkOutput {
    Eigen::MatrixXd output;
    ForwardTrace trace;
    Eigen::Index n = 0;

    auto precoder_reals() const { return output.leftCols(output.cols() - n); }
    auto phi_cont() const { return output.rightCols(n); }
};

inline NetworkOutput forward(const NetworkParams &p, const Eigen::MatrixXd &x, Mode mode)
{
    if (x.cols() != p.shape.input_width())
        throw validation_error("forward: input width does not match network");
    if (mode == Mode::training && x.rows() < 2)
        throw degenerate_input_error("forward: training mode needs a batch of at least 2 for batch statistics");
    NetworkOutput out;
    auto &t = out.trace;
    t.mode = mode;
    t.version = p.version;
    t.batch = x.rows();
    out.n = p.shape.n;

    Eigen::MatrixXd a = x;
    for (int l = 0; l < dense_layer_count; ++l) {
        t.inputs[l] = a;
        Eigen::MatrixXd z = a * p.dense[l].weight;
        z.rowwise() += p.dense[l].bias;
        if (l == dense_layer_count - 1) {
            out.output = std::move(z);
            break;
        }
        const auto &bn = p.norm[l];
        Eigen::RowVectorXd mean, var;
        if (mode == Mode::training) {
            mean = z.colwise().mean();
            var = (z.rowwise() - mean).array().square().colwise().mean();
        } else {
            mean = bn.running_mean;
            var = bn.running_var;
        }
        const Eigen::RowVectorXd inv = (var.array() + p.epsilon).rsqrt();
        Eigen::MatrixXd xhat = (z.rowwise() - mean).array().rowwise() * inv.array();
        Eigen::MatrixXd y = (xhat.array().rowwise() * bn.scale.array()).rowwise() + bn.shift.array();
        a = y.cwiseMax(0.0);
        t.batch_mean[l] = std::move(mean);
        t.batch_var[l] = std::move(var);
        t.inv_std[l] = inv;
        t.xhat[l] = std::move(xhat);
        t.normalized[l] = std::move(y);
    }
    return out;
}

// Folds the batch statistics of a training-mode trace into the running
// statistics (unbiased variance).
inline void update_running_stats(NetworkParams &p, const ForwardTrace &t)
{
    if (t.mode != Mode::training)
        return;
    const double m = p.momentum;
    const double unbias = static_cast<double>(t.batch) / static_cast<double>(t.batch - 1);
    for (int l = 0; l < norm_layer_count; ++l) {
        p.norm[l].running_mean = m * p.norm[l].running_mean + (1.0 - m) * t.batch_mean[l];
        p.norm[l].running_var = m * p.norm[l].running_var + (1.0 - m) * unbias * t.batch_var[l];
    }
}

struct NetworkGrads {
    std::array<Eigen::MatrixXd, dense_layer_count> weight;
    std::array<Eigen::RowVectorXd, dense_layer_count> bias;
    std::array<Eigen::RowVectorXd, norm_layer_count> scale;
    std::array<Eigen::RowVectorXd, norm_layer_count> shift;
    std::vector<double> rho;
};

// Gradient of a scalar loss with respect to the raw output and to rho, as
// produced by the quantizer/precoder head.
struct HeadGrads {
    Eigen::MatrixXd d_output; // L x H
    std::vector<double> d_rho;
};

inline NetworkGrads backward(const NetworkParams &p, const ForwardTrace &t, const HeadGrads &up)
{
    if (t.mode != Mode::training)
        throw validation_error("backward: trace must come from a training-mode forward pass");
    if (t.version != p.version)
        throw validation_error("backward: trace is stale (parameters changed since forward)");
    if (up.d_output.rows() != t.batch || up.d_output.cols() != p.shape.output_width())
        throw validation_error("backward: upstream gradient does not match trace");
    if (up.d_rho.size() != p.quantizer.rho.size())
        throw validation_error("backward: upstream rho gradient has wrong size");

    NetworkGrads g;
    g.rho = up.d_rho;
    const double L = static_cast<double>(t.batch);
    Eigen::MatrixXd dz = up.d_output;
    for (int l = dense_layer_count - 1; l >= 0; --l) {
        g.weight[l] = t.inputs[l].transpose() * dz;
        g.bias[l] = dz.colwise().sum();
        if (l == 0)
            break;
        Eigen::MatrixXd dy = dz * p.dense[l].weight.transpose();
        const int n = l - 1;
        dy = dy.cwiseProduct((t.normalized[n].array() > 0.0).cast<double>().matrix());
        g.scale[n] = dy.cwiseProduct(t.xhat[n]).colwise().sum();
        g.shift[n] = dy.colwise().sum();
        const Eigen::MatrixXd dxhat = dy.array().rowwise() * p.norm[n].scale.array();
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(t.xhat[n]).colwise().sum();
        Eigen::MatrixXd centered = (L * dxhat).rowwise() - sum_dxhat;
        centered -= (t.xhat[n].array().rowwise() * sum_dxhat_xhat.array()).matrix();
        dz = (centered.array().rowwise() * (t.inv_std[n].array() / L)).matrix();
    }
    return g;
}

enum class QuantizeMode { soft, hard };

// Mapping from one raw output row to the RIS phases and the power-normalised
// precoder.
struct HeadState {
    Eigen::VectorXd phi_cont;
    ReflectionState reflection;
    Eigen::MatrixXcd w_raw;
    Eigen::MatrixXcd w;
};

inline HeadState apply_head(const Eigen::Ref<const Eigen::RowVectorXd> &row, const NetworkShape &shape,
                            const QuantizerParams &quantizer, double pt, QuantizeMode mode)
{
    const int M = shape.m, K = shape.k, N = shape.n;
    const int km = K * M;
    HeadState s;
    s.phi_cont = row.tail(N).transpose();
    Eigen::VectorXd phi(N);
    for (int n = 0; n < N; ++n)
        phi(n) = mode == QuantizeMode::soft ? soft_quantize(s.phi_cont(n), quantizer)
                                            : hard_phase(s.phi_cont(n), quantizer);
    s.reflection = phases_to_theta(phi);
    s.w_raw.resize(M, K);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < M; ++m)
            s.w_raw(m, k) = {row(k * M + m), row(km + k * M + m)};
    s.w = normalize_precoder(s.w_raw, pt);
    return s;
}

// Back-propagates Wirtinger gradients dL/d(conj theta) and dL/d(conj W) of a
// soft-mode head, plus a direct dL/dphi_cont term, into one output row and
// the rho gradient.
inline void head_backward(const HeadState &s, const QuantizerParams &quantizer, double pt,
                          const Eigen::VectorXcd &d_theta, const Eigen::MatrixXcd &d_w,
                          const Eigen::VectorXd &d_phi_cont_direct, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> d_row,
                          std::vector<double> &d_rho)
{
    const Eigen::Index N = s.phi_cont.size();
    const Eigen::Index M = s.w.rows(), K = s.w.cols();
    const Eigen::Index km = M * K;

    for (Eigen::Index n = 0; n < N; ++n) {
        // theta = e^{j phi}: dL/dphi = 2 Re(conj(g) j theta) = -2 Im(conj(g) theta)
        const double d_phi = -2.0 * std::imag(std::conj(d_theta(n)) * s.reflection.theta(n));
        const auto qg = soft_quantize_grad(s.phi_cont(n), quantizer);
        d_row(2 * km + n) = d_phi * qg.d_dx + d_phi_cont_direct(n);
        for (std::size_t i = 0; i < d_rho.size(); ++i)
            d_rho[i] += d_phi * qg.d_drho[i];
    }

    // W = sqrt(Pt) V / |V| over the real vector V: dL/dV = (s/|V|)(g - u (u . g))
    const double norm = s.w_raw.norm();
    const double scale = std::sqrt(pt) / norm;
    const Eigen::MatrixXcd u = s.w_raw / norm;
    const Eigen::MatrixXcd g = 2.0 * d_w; // real-pair gradient packed as complex
    const double ug = (u.real().cwiseProduct(g.real()) + u.imag().cwiseProduct(g.imag())).sum();
    const Eigen::MatrixXcd dv = scale * (g - ug * u);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index m = 0; m < M; ++m) {
            d_row(k * M + m) = dv(m, k).real();
            d_row(km + k * M + m) = dv(m, k).imag();
        }
}

// Per-feature standardisation fitted on the training split.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const
    {
        if (x.cols() != mean.size())
            throw validation_error("standardizer: feature width mismatch");
        return (x.rowwise() - mean).array().rowwise() / scale.array();
    }

    static Standardizer fit(const Eigen::MatrixXd &x)
    {
        Standardizer s;
        s.mean = x.colwise().mean();
        const Eigen::RowVectorXd var = (x.rowwise() - s.mean).array().square().colwise().mean();
        s.scale = var.array().sqrt().max(1e-12 + 1e-6 * var.array().sqrt().maxCoeff());
        return s;
    }

    static Standardizer identity(int width)
    {
        return {Eigen::RowVectorXd::Zero(width), Eigen::RowVectorXd::Ones(width)};
    }
};

// Real feature row [Re G, Im G, Re h_1..h_K, Im h_1..h_K]; G row-major.
inline Eigen::RowVectorXd stack_features(const Channels &ch)
{
    const Eigen::Index N = ch.G.rows(), M = ch.G.cols();
    const Eigen::Index K = static_cast<Eigen::Index>(ch.h.size());
    Eigen::RowVectorXd f(2 * N * M + 2 * N * K);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < N; ++r)
        for (Eigen::Index c = 0; c < M; ++c)
            f(i++) = ch.G(r, c).real();
    for (Eigen::Index r = 0; r < N; ++r)
        for (Eigen::Index c = 0; c < M; ++c)
            f(i++) = ch.G(r, c).imag();
    for (const auto &h : ch.h)
        for (Eigen::Index n = 0; n < N; ++n)
            f(i++) = h(n).real();
    for (const auto &h : ch.h)
        for (Eigen::Index n = 0; n < N; ++n)
            f(i++) = h(n).imag();
    return f;
}

inline Eigen::MatrixXd stack_inputs(std::span<const ChannelSample> samples)
{
    detail::require(!samples.empty(), "stack_inputs: no samples");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), stack_features(samples[0].estimate).size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        x.row(static_cast<Eigen::Index>(i)) = stack_features(samples[i].estimate);
    return x;
}

// A trained mapping: network plus the input standardisation it was fitted with.
struct Model {
    NetworkParams params;
    Standardizer standardizer;
};

struct BeamformingSolution {
    Eigen::VectorXd phi_cont;
    ReflectionState reflection;
    Eigen::MatrixXcd w;
    RateReport rates;
};

// Inference-statistics prediction for a batch of samples, scored on their
// estimated channels.
inline std::vector<BeamformingSolution> predict_solutions(const Model &model, std::span<const ChannelSample> samples,
                                                          const SystemConfig &cfg, QuantizeMode mode)
{
    if (samples.empty())
        return {};
    const auto out = forward(model.params, model.standardizer.apply(stack_inputs(samples)), Mode::inference);
    const auto q = cfg.weights();
    std::vector<BeamformingSolution> sols;
    sols.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto head = apply_head(out.output.row(static_cast<Eigen::Index>(i)), model.params.shape,
                               model.params.quantizer, cfg.pt, mode);
        BeamformingSolution s{head.phi_cont, head.reflection, head.w, {}};
        s.rates = rate_report(samples[i].estimate, s.reflection.theta, s.w, cfg.sigma2, q);
        sols.push_back(std::move(s));
    }
    return sols;
}

inline BeamformingSolution predict_solution(const Model &model, const ChannelSample &sample, const SystemConfig &cfg,
                                            QuantizeMode mode)
{
    return predict_solutions(model, std::span<const ChannelSample>(&sample, 1), cfg, mode).front();
}

} // namespace risq
