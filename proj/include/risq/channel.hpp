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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"
#include "system_config.hpp"

namespace risq {

// Large-scale gain beta0 * (d/d0)^-p as a linear power ratio.
inline double path_loss(double d, double beta0_db, double d0, double p_exp)
{
    if (!(d > 0.0) || !(d0 > 0.0))
        throw domain_error("path_loss: distances must be positive");
    return std::pow(10.0, (beta0_db - 10.0 * p_exp * std::log10(d / d0)) / 10.0);
}

// Half-wavelength ULA along the y axis, broadside towards +x.
inline Eigen::VectorXcd ula_response(int elements, const Point2 &from, const Point2 &to)
{
    const double d = distance(from, to);
    const double uy = d > 0.0 ? (to.y - from.y) / d : 0.0;
    Eigen::VectorXcd a(elements);
    for (int m = 0; m < elements; ++m)
        a(m) = std::polar(1.0, std::numbers::pi * m * uy);
    return a;
}

// Half-wavelength URA with columns along the x axis and rows along z. The
// scenario is planar, so the row phase progression is zero; element n maps
// to (column n % Nx, row n / Nx).
inline Eigen::VectorXcd ura_response(int nx, int ny, const Point2 &from, const Point2 &to)
{
    const double d = distance(from, to);
    const double ux = d > 0.0 ? (to.x - from.x) / d : 0.0;
    const double uz = 0.0;
    Eigen::VectorXcd a(nx * ny);
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c)
            a(r * nx + c) = std::polar(1.0, std::numbers::pi * (c * ux + r * uz));
    return a;
}

// sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * CN(0,1) entries. An infinite factor
// yields the LoS component unchanged.
inline Eigen::MatrixXcd rician_channel(const Eigen::MatrixXcd &los, double kappa, Rng &rng)
{
    if (std::isnan(kappa) || kappa < 0.0)
        throw domain_error("rician_channel: kappa must be non-negative");
    if (std::isinf(kappa))
        return los;
    const double w_los = std::sqrt(kappa / (1.0 + kappa));
    const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
    Eigen::MatrixXcd out(los.rows(), los.cols());
    for (Eigen::Index c = 0; c < los.cols(); ++c)
        for (Eigen::Index r = 0; r < los.rows(); ++r)
            out(r, c) = w_los * los(r, c) + w_nlos * complex_normal(rng);
    return out;
}

// One channel realisation for the cascaded AP-RIS-user link.
struct Channels {
    Eigen::MatrixXcd G;                // N x M, AP to RIS
    std::vector<Eigen::VectorXcd> h;   // K vectors of length N, RIS to user
};

// Estimated channels as seen by the AP/RIS together with the error statistics
// needed to synthesise true-channel draws.
struct ChannelSample {
    Channels estimate;
    double eta = 0.0;
    std::uint64_t seed = 0;
    std::vector<Point2> users;

    bool perfect_csi() const { return eta == 0.0; }
    int n() const { return static_cast<int>(estimate.G.rows()); }
    int m() const { return static_cast<int>(estimate.G.cols()); }
    int k() const { return static_cast<int>(estimate.h.size()); }
};

inline void check_dimensions(const Channels &ch, const SystemConfig &cfg)
{
    detail::require(ch.G.rows() == cfg.N && ch.G.cols() == cfg.M, "G must be N x M");
    detail::require(static_cast<int>(ch.h.size()) == cfg.K, "expected K user channels");
    for (const auto &h : ch.h)
        detail::require(h.size() == cfg.N, "user channel must have N entries");
}

namespace detail {

template <typename Derived>
double mean_power(const Eigen::MatrixBase<Derived> &x)
{
    return x.squaredNorm() / static_cast<double>(x.size());
}

template <typename Derived>
void add_error(Eigen::MatrixBase<Derived> &x, double variance, Rng &rng)
{
    if (variance <= 0.0)
        return;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            x(r, c) += complex_normal(rng, variance);
}

} // namespace detail

// True channels = estimate + CSCG error whose per-entry variance is eta times
// the mean squared magnitude of the corresponding estimate (G and each h_k
// normalised separately).
inline std::vector<Channels> draw_true_channels(const ChannelSample &sample, int j_count, Rng &rng)
{
    detail::require(j_count >= 1, "draw_true_channels: j_count must be >= 1");
    if (!(sample.eta >= 0.0))
        throw domain_error("draw_true_channels: eta must be non-negative");
    const double var_g = sample.eta * detail::mean_power(sample.estimate.G);
    std::vector<double> var_h;
    for (const auto &h : sample.estimate.h)
        var_h.push_back(sample.eta * detail::mean_power(h));

    std::vector<Channels> draws(j_count, sample.estimate);
    if (sample.eta == 0.0)
        return draws;
    for (auto &d : draws) {
        detail::add_error(d.G, var_g, rng);
        for (std::size_t k = 0; k < d.h.size(); ++k)
            detail::add_error(d.h[k], var_h[k], rng);
    }
    return draws;
}

// Deterministic LoS components of the configured geometry for a user layout.
inline Channels los_channels(const SystemConfig &cfg, const std::vector<Point2> &users)
{
    const auto &g = cfg.geometry;
    Channels los;
    const Eigen::VectorXcd a_ris = ura_response(cfg.cols(), cfg.rows(), g.ris, g.ap);
    const Eigen::VectorXcd a_ap = ula_response(cfg.M, g.ap, g.ris);
    los.G = a_ris * a_ap.adjoint();
    for (const auto &u : users)
        los.h.push_back(ura_response(cfg.cols(), cfg.rows(), g.ris, u));
    return los;
}

// One estimated-channel sample. Users are uniform in the configured disc. The
// estimate is scaled by 1/sqrt(1+eta) so that estimate + error keeps the
// Rician power of the physical link for every eta.
inline ChannelSample generate_sample(const SystemConfig &cfg, double eta, std::uint64_t seed)
{
    cfg.validate();
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw domain_error("generate_sample: eta must be a finite non-negative value");
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ChannelSample s;
    s.eta = eta;
    s.seed = seed;
    const auto &g = cfg.geometry;
    for (int k = 0; k < cfg.K; ++k) {
        const double r = g.user_radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        s.users.push_back({g.user_center.x + r * std::cos(phi), g.user_center.y + r * std::sin(phi)});
    }

    const Channels los = los_channels(cfg, s.users);
    const double shrink = 1.0 / std::sqrt(1.0 + eta);
    const double pl_g = path_loss(distance(g.ap, g.ris), cfg.beta0_db, cfg.d0, cfg.p_exp);
    s.estimate.G = rician_channel(los.G, cfg.kappa_G, rng) * (std::sqrt(pl_g) * shrink);
    for (int k = 0; k < cfg.K; ++k) {
        const double pl_h = path_loss(distance(g.ris, s.users[k]), cfg.beta0_db, cfg.d0, cfg.p_exp);
        Eigen::VectorXcd h = rician_channel(los.h[k], cfg.kappa_r, rng) * (std::sqrt(pl_h) * shrink);
        s.estimate.h.push_back(std::move(h));
    }
    return s;
}

// count samples with per-sample seeds derive_seed(seed, index).
inline std::vector<ChannelSample> generate_samples(const SystemConfig &cfg, int count, double eta,
                                                   std::uint64_t seed)
{
    detail::require(count >= 1, "generate_samples: count must be >= 1");
    std::vector<ChannelSample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(generate_sample(cfg, eta, derive_seed(seed, static_cast<std::uint64_t>(i))));
    return out;
}

// Empirical normalised MSE E|x - x_hat|^2 / E|x_hat|^2 over every entry of
// every draw.
inline double empirical_nmse(const ChannelSample &sample, const std::vector<Channels> &draws)
{
    double err = 0.0, ref = 0.0;
    for (const auto &d : draws) {
        err += (d.G - sample.estimate.G).squaredNorm();
        ref += sample.estimate.G.squaredNorm();
        for (std::size_t k = 0; k < d.h.size(); ++k) {
            err += (d.h[k] - sample.estimate.h[k]).squaredNorm();
            ref += sample.estimate.h[k].squaredNorm();
        }
    }
    return err / ref;
}

} // namespace risq
