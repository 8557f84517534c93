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
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"

namespace risq {

// RIS phases and the matching unit-modulus reflection coefficients.
struct ReflectionState {
    Eigen::VectorXd phi;
    Eigen::VectorXcd theta;
};

struct RateReport {
    Eigen::VectorXd gamma;
    Eigen::VectorXd rates;
    double wsr = 0.0;
};

inline ReflectionState phases_to_theta(const Eigen::VectorXd &phi)
{
    ReflectionState s{phi, Eigen::VectorXcd(phi.size())};
    for (Eigen::Index n = 0; n < phi.size(); ++n)
        s.theta(n) = {std::cos(phi(n)), std::sin(phi(n))};
    return s;
}

// sqrt(Pt) * W / ||W||_F.
inline Eigen::MatrixXcd normalize_precoder(const Eigen::MatrixXcd &w_raw, double pt)
{
    const double norm = w_raw.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw degenerate_input_error("normalize_precoder: precoder has no direction");
    return w_raw * (std::sqrt(pt) / norm);
}

// h^H diag(theta) G as a 1 x M row.
inline Eigen::RowVectorXcd effective_channel(const Eigen::VectorXcd &h, const Eigen::VectorXcd &theta,
                                             const Eigen::MatrixXcd &G)
{
    if (h.size() != theta.size() || G.rows() != theta.size())
        throw validation_error("effective_channel: dimension mismatch");
    return (h.conjugate().cwiseProduct(theta)).transpose() * G;
}

// Stacked effective channels, K x M.
inline Eigen::MatrixXcd effective_channels(const Channels &ch, const Eigen::VectorXcd &theta)
{
    Eigen::MatrixXcd E(static_cast<Eigen::Index>(ch.h.size()), ch.G.cols());
    for (std::size_t k = 0; k < ch.h.size(); ++k)
        E.row(static_cast<Eigen::Index>(k)) = effective_channel(ch.h[k], theta, ch.G);
    return E;
}

inline Eigen::VectorXd sinr(const Eigen::MatrixXcd &E, const Eigen::MatrixXcd &W, double sigma2)
{
    if (!(sigma2 > 0.0))
        throw domain_error("sinr: noise power must be positive");
    if (E.cols() != W.rows() || E.rows() != W.cols())
        throw validation_error("sinr: effective channel / precoder mismatch");
    const Eigen::MatrixXd P = (E * W).cwiseAbs2();
    Eigen::VectorXd gamma(E.rows());
    for (Eigen::Index k = 0; k < E.rows(); ++k)
        gamma(k) = P(k, k) / (P.row(k).sum() - P(k, k) + sigma2);
    return gamma;
}

inline Eigen::VectorXd sinr(const Channels &ch, const Eigen::VectorXcd &theta, const Eigen::MatrixXcd &W,
                            double sigma2)
{
    return sinr(effective_channels(ch, theta), W, sigma2);
}

inline double wsr(const Eigen::VectorXd &gamma, std::span<const double> q)
{
    if (static_cast<std::size_t>(gamma.size()) != q.size())
        throw validation_error("wsr: gamma and q lengths differ");
    double total = 0.0;
    for (Eigen::Index k = 0; k < gamma.size(); ++k)
        total += q[static_cast<std::size_t>(k)] * std::log2(1.0 + gamma(k));
    return total;
}

inline RateReport rate_report(const Channels &ch, const Eigen::VectorXcd &theta, const Eigen::MatrixXcd &W,
                              double sigma2, std::span<const double> q)
{
    RateReport r;
    r.gamma = sinr(ch, theta, W, sigma2);
    r.rates = (1.0 + r.gamma.array()).log() / std::numbers::ln2;
    r.wsr = wsr(r.gamma, q);
    return r;
}

// WSR together with its Wirtinger gradients d/d(conj theta) and d/d(conj W).
// For a real f, df = 2 Re(sum conj(g) dz).
struct WsrGradient {
    double wsr = 0.0;
    Eigen::VectorXcd d_theta;
    Eigen::MatrixXcd d_w;
};

inline WsrGradient wsr_with_gradient(const Channels &ch, const Eigen::VectorXcd &theta, const Eigen::MatrixXcd &W,
                                     double sigma2, std::span<const double> q)
{
    const Eigen::MatrixXcd E = effective_channels(ch, theta);
    const Eigen::MatrixXcd S = E * W; // S(k, n) = e_k w_n
    const Eigen::Index K = S.rows();
    const Eigen::MatrixXd P = S.cwiseAbs2();

    WsrGradient out;
    Eigen::MatrixXcd dS(K, K); // dWSR / d conj(S)
    for (Eigen::Index k = 0; k < K; ++k) {
        const double total = P.row(k).sum() + sigma2;
        const double interference = total - P(k, k);
        const double qk = q[static_cast<std::size_t>(k)] / std::numbers::ln2;
        out.wsr += q[static_cast<std::size_t>(k)] * std::log2(total / interference);
        for (Eigen::Index n = 0; n < K; ++n) {
            const double dP = n == k ? qk / total : qk * (1.0 / total - 1.0 / interference);
            dS(k, n) = dP * S(k, n);
        }
    }
    out.d_w = E.adjoint() * dS;

    // S(k, n) = sum_p conj(h_k[p]) theta_p (G w_n)[p]
    const Eigen::MatrixXcd GW = ch.G * W; // N x K
    out.d_theta = Eigen::VectorXcd::Zero(theta.size());
    for (Eigen::Index k = 0; k < K; ++k)
        out.d_theta += ch.h[static_cast<std::size_t>(k)].cwiseProduct((GW.conjugate() * dS.row(k).transpose()));
    return out;
}

} // namespace risq
