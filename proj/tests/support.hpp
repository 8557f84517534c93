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

// Helpers shared by the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "risq/risq.hpp"

namespace risq::testing {

inline Channels random_channels(int n, int m, int k, Rng &rng)
{
    Channels ch;
    ch.G.resize(n, m);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c)
            ch.G(r, c) = complex_normal(rng);
    for (int u = 0; u < k; ++u) {
        Eigen::VectorXcd h(n);
        for (int r = 0; r < n; ++r)
            h(r) = complex_normal(rng);
        ch.h.push_back(std::move(h));
    }
    return ch;
}

inline SystemConfig tiny_system(int n, int m, int k, int bits)
{
    SystemConfig s;
    s.M = m;
    s.N = n;
    s.Nx = n;
    s.Ny = 1;
    s.K = k;
    s.bits = bits;
    s.q.assign(static_cast<std::size_t>(k), 1.0);
    s.set_pt_dbm(30.0);                          // 1 W
    s.set_sigma2_dbm(30.0 + 10.0 * std::log10(0.5)); // 0.5 W
    return s;
}

// Copies of one sample with a small relative perturbation on every channel
// entry. Identical rows have no batch variance, which leaves batch
// normalisation nothing to normalise.
inline std::vector<ChannelSample> jittered_copies(const ChannelSample &sample, int count, double rel, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    std::vector<ChannelSample> out(static_cast<std::size_t>(count), sample);
    for (auto &s : out) {
        for (Eigen::Index i = 0; i < s.estimate.G.size(); ++i)
            s.estimate.G(i) *= 1.0 + complex_normal(rng, rel * rel);
        for (auto &h : s.estimate.h)
            for (Eigen::Index i = 0; i < h.size(); ++i)
                h(i) *= 1.0 + complex_normal(rng, rel * rel);
    }
    return out;
}

struct GradientCheck {
    double noise_floor = 0.0;   // round-off resolution of the central difference, 10 eps |L| / h
    double max_rel_error = 0.0; // |a - f| / max(|a|, |f|) over entries the difference can resolve at rel_tol
    double norm_rel_error = 0.0; // ||a - f|| / ||f|| over every entry
    long long checked = 0;
    long long resolved = 0;    // entries with rel_tol * max(|a|, |f|) above the noise floor
    long long violations = 0;  // entries with |a - f| > rel_tol * max(|a|, |f|) + noise_floor
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    double objective = 0.0;
};

// Central finite differences of the training objective against backward(),
// through batch normalisation, the precoder normalisation and the quantizer
// boundaries. Every trainable scalar is perturbed.
inline GradientCheck check_network_gradient(NetworkParams p, const Eigen::MatrixXd &x,
                                            const std::vector<std::vector<Channels>> &draws, const SystemConfig &sys,
                                            bool penalized, double lambda, double rel_tol = 1e-5, double h = 1e-6)
{
    auto objective = [&](const NetworkParams &q) {
        const auto out = forward(q, x, Mode::training);
        return evaluate_objective(q, out.output, draws, sys, penalized, lambda, false).loss;
    };
    const auto out = forward(p, x, Mode::training);
    const auto obj = evaluate_objective(p, out.output, draws, sys, penalized, lambda, true);
    const NetworkGrads g = backward(p, out.trace, obj.grads);

    std::vector<double> analytic;
    std::vector<double *> slots;
    visit_tensors(p, g, [&](Eigen::Map<Eigen::VectorXd> w, Eigen::Map<const Eigen::VectorXd> dw) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            slots.push_back(w.data() + i);
            analytic.push_back(dw(i));
        }
    });

    GradientCheck r;
    r.objective = obj.loss;
    r.noise_floor = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(obj.loss) / h;
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + h;
        const double fp = objective(p);
        *slots[i] = saved - h;
        const double fm = objective(p);
        *slots[i] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        const double err = std::abs(a - fd);
        const double scale = std::max(std::abs(a), std::abs(fd));
        diff2 += err * err;
        ref2 += fd * fd;
        ++r.checked;
        if (err > rel_tol * scale + r.noise_floor)
            ++r.violations;
        if (rel_tol * scale > r.noise_floor) {
            ++r.resolved;
            if (err / scale > r.max_rel_error) {
                r.max_rel_error = err / scale;
                r.worst_analytic = a;
                r.worst_numeric = fd;
            }
        }
    }
    r.norm_rel_error = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
    return r;
}

} // namespace risq::testing
