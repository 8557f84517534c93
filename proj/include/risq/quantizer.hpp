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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace risq {

// Soft-to-hard phase quantizer: B - 1 shifted tanh steps of common amplitude
// a = pi / 2^b and steepness c, with learnable decision boundaries rho.
struct QuantizerParams {
    int bits = 1;
    double c = 1.0;
    std::vector<double> rho;

    int levels() const { return 1 << bits; }
    double amplitude() const { return std::numbers::pi / levels(); }
    double full_scale() const { return 2.0 * amplitude() * (levels() - 1); }
    double delta_w() const { return 2.0 * std::numbers::pi / levels(); }

    std::vector<double> sorted_rho() const
    {
        auto r = rho;
        std::sort(r.begin(), r.end());
        return r;
    }

    void validate() const
    {
        detail::require(bits >= 1 && bits <= 16, "quantizer: bits must be in [1, 16]");
        if (!(c > 0.0) || !std::isfinite(c))
            throw domain_error("quantizer: steepness c must be positive");
        detail::require(static_cast<int>(rho.size()) == levels() - 1, "quantizer: need 2^b - 1 boundaries");
    }

    // Boundaries halfway between the uniform levels: (2i - 1) pi / B.
    static QuantizerParams uniform(int bits, double c)
    {
        QuantizerParams p{bits, c, {}};
        for (int i = 1; i < p.levels(); ++i)
            p.rho.push_back((2.0 * i - 1.0) * std::numbers::pi / p.levels());
        return p;
    }
};

namespace detail {

// sech^2(u) = 4 e^{-2|u|} / (1 + e^{-2|u|})^2; never overflows.
inline double sech2(double u)
{
    const double e = std::exp(-2.0 * std::abs(u));
    return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

} // namespace detail

inline double soft_quantize(double x, const QuantizerParams &p)
{
    const double a = p.amplitude();
    double y = 0.0;
    for (double r : p.rho)
        y += a * (std::tanh(p.c * (x - r)) + 1.0);
    return y;
}

struct QuantizerGrad {
    double d_dx = 0.0;
    std::vector<double> d_drho;
};

// d/dx = sum 4ac / (e^u + e^-u)^2 = sum a c sech^2(u), u = c (x - rho_i);
// d/drho_i is the negated i-th term.
inline QuantizerGrad soft_quantize_grad(double x, const QuantizerParams &p)
{
    const double a = p.amplitude();
    QuantizerGrad g{0.0, std::vector<double>(p.rho.size())};
    for (std::size_t i = 0; i < p.rho.size(); ++i) {
        const double term = a * p.c * detail::sech2(p.c * (x - p.rho[i]));
        g.d_dx += term;
        g.d_drho[i] = -term;
    }
    return g;
}

// Index of the half-open decision region [rho_(i), rho_(i+1)) containing x,
// using the boundaries in sorted order; 0 .. B-1.
inline int hard_level(double x, const QuantizerParams &p)
{
    const auto r = p.sorted_rho();
    return static_cast<int>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
}

// Staircase replacement of the soft quantizer: 0 below the first boundary,
// full scale from the last boundary on, and the soft value at the midpoint of
// the enclosing region in between.
inline double hard_quantize(double x, const QuantizerParams &p)
{
    const auto r = p.sorted_rho();
    const int level = static_cast<int>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
    if (level == 0)
        return 0.0;
    if (level == p.levels() - 1)
        return std::fmod(p.full_scale(), 2.0 * std::numbers::pi);
    const double mid = 0.5 * (r[level - 1] + r[level]);
    return std::fmod(soft_quantize(mid, p), 2.0 * std::numbers::pi);
}

// Phase from the discrete set S for the region containing x. Coincides with
// hard_quantize when the soft steps are saturated at the region midpoints.
inline double hard_phase(double x, const QuantizerParams &p) { return hard_level(x, p) * p.delta_w(); }

// Boundary penalty: sum 4ac / (e^{tanh u} + e^{tanh(-u)})^2 = sum a c sech^2(tanh u).
inline double penalty(double x, const QuantizerParams &p)
{
    const double a = p.amplitude();
    double f = 0.0;
    for (double r : p.rho) {
        const double t = std::tanh(p.c * (x - r));
        const double s = std::exp(t) + std::exp(-t);
        f += 4.0 * a * p.c / (s * s);
    }
    return f;
}

inline QuantizerGrad penalty_grad(double x, const QuantizerParams &p)
{
    const double a = p.amplitude();
    QuantizerGrad g{0.0, std::vector<double>(p.rho.size())};
    for (std::size_t i = 0; i < p.rho.size(); ++i) {
        const double u = p.c * (x - p.rho[i]);
        const double t = std::tanh(u);
        // d/du [a c sech^2(t)] = -2 a c sech^2(t) tanh(t) sech^2(u), t = tanh u
        const double dfdu = -2.0 * a * p.c * detail::sech2(t) * std::tanh(t) * detail::sech2(u);
        g.d_dx += p.c * dfdu;
        g.d_drho[i] = -p.c * dfdu;
    }
    return g;
}

// Relative WSR lost when the soft quantizer is swapped for the staircase.
inline double gap(double wsr_t, double wsr_p)
{
    if (!(wsr_t > 0.0))
        throw domain_error("gap: training WSR must be positive");
    return (wsr_t - wsr_p) / wsr_t;
}

} // namespace risq
