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
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"
#include "linkmath.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "system_config.hpp"

namespace risq {

enum class PrecoderRule { mrt, zf };

inline PrecoderRule default_rule(int users) { return users > 1 ? PrecoderRule::zf : PrecoderRule::mrt; }

inline std::string to_string(PrecoderRule r) { return r == PrecoderRule::mrt ? "mrt" : "zf"; }

// Matched filter per user, jointly scaled to ||W||_F = sqrt(Pt).
inline Eigen::MatrixXcd mrt_precoder(const Eigen::MatrixXcd &E, double pt)
{
    Eigen::MatrixXcd W = E.adjoint();
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        const double nk = W.col(k).norm();
        if (!(nk > 0.0))
            throw degenerate_input_error("mrt_precoder: zero effective channel");
        W.col(k) /= nk;
    }
    return normalize_precoder(W, pt);
}

// Pseudo-inverse E^H (E E^H)^-1, jointly scaled to ||W||_F = sqrt(Pt).
inline Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd &E, double pt, double max_condition = 1e10)
{
    if (E.rows() > E.cols())
        throw conditioning_error("zf_precoder: more users than antennas");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(E);
    const auto &sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > max_condition)
        throw conditioning_error("zf_precoder: effective channel is rank deficient");
    const Eigen::MatrixXcd gram = E * E.adjoint();
    const Eigen::MatrixXcd W = E.adjoint() * gram.llt().solve(Eigen::MatrixXcd::Identity(E.rows(), E.rows()));
    return normalize_precoder(W, pt);
}

inline Eigen::MatrixXcd apply_rule(PrecoderRule rule, const Eigen::MatrixXcd &E, double pt)
{
    return rule == PrecoderRule::mrt ? mrt_precoder(E, pt) : zf_precoder(E, pt);
}

// Scores a phase vector with the given precoder rule. A rank-deficient
// effective channel under ZF scores zero rather than aborting a search.
inline BeamformingSolution score_phases(const Channels &ch, const Eigen::VectorXd &phi, const SystemConfig &cfg,
                                        PrecoderRule rule)
{
    BeamformingSolution s;
    s.phi_cont = phi;
    s.reflection = phases_to_theta(phi);
    const Eigen::MatrixXcd E = effective_channels(ch, s.reflection.theta);
    const auto q = cfg.weights();
    try {
        s.w = apply_rule(rule, E, cfg.pt);
    } catch (const domain_error &) {
        s.w = Eigen::MatrixXcd::Zero(cfg.M, cfg.K);
        s.rates = {Eigen::VectorXd::Zero(cfg.K), Eigen::VectorXd::Zero(cfg.K), 0.0};
        return s;
    }
    s.rates = rate_report(ch, s.reflection.theta, s.w, cfg.sigma2, q);
    return s;
}

// Best of `trials` uniformly drawn discrete phase vectors.
inline BeamformingSolution random_baseline(const Channels &ch, const SystemConfig &cfg, Rng &rng, int trials,
                                           PrecoderRule rule)
{
    detail::require(trials >= 1, "random_baseline: trials must be >= 1");
    std::uniform_int_distribution<int> level(0, cfg.levels() - 1);
    BeamformingSolution best;
    best.rates.wsr = -1.0;
    Eigen::VectorXd phi(cfg.N);
    for (int t = 0; t < trials; ++t) {
        for (int n = 0; n < cfg.N; ++n)
            phi(n) = level(rng) * cfg.delta_w();
        auto s = score_phases(ch, phi, cfg, rule);
        if (s.rates.wsr > best.rates.wsr)
            best = std::move(s);
    }
    return best;
}

inline BeamformingSolution random_baseline(const Channels &ch, const SystemConfig &cfg, Rng &rng, int trials)
{
    return random_baseline(ch, cfg, rng, trials, default_rule(cfg.K));
}

struct OracleResult {
    Eigen::VectorXd best_phi;
    double best_wsr = 0.0;
    std::uint64_t evaluated_count = 0;
    PrecoderRule rule = PrecoderRule::mrt;
};

inline constexpr int oracle_bit_budget = 20;

// Phase vector whose levels are the base-B digits of `index`, element 0 the
// most significant, so enumeration order is lexicographic in the levels.
inline Eigen::VectorXd phases_from_index(std::uint64_t index, const SystemConfig &cfg)
{
    Eigen::VectorXd phi(cfg.N);
    const auto B = static_cast<std::uint64_t>(cfg.levels());
    for (int n = cfg.N - 1; n >= 0; --n) {
        phi(n) = static_cast<double>(index % B) * cfg.delta_w();
        index /= B;
    }
    return phi;
}

// Exhaustive search over all B^N discrete phase vectors; ties keep the lowest
// configuration index.
inline OracleResult exhaustive_oracle(const Channels &ch, const SystemConfig &cfg, PrecoderRule rule)
{
    if (cfg.N * cfg.bits > oracle_bit_budget)
        throw budget_error("exhaustive_oracle: N*b = " + std::to_string(cfg.N * cfg.bits) + " exceeds budget of " +
                           std::to_string(oracle_bit_budget));
    const std::uint64_t total = std::uint64_t{1} << (cfg.N * cfg.bits);
    OracleResult r;
    r.rule = rule;
    r.best_wsr = -1.0;
    for (std::uint64_t i = 0; i < total; ++i) {
        const Eigen::VectorXd phi = phases_from_index(i, cfg);
        const double w = score_phases(ch, phi, cfg, rule).rates.wsr;
        if (w > r.best_wsr) {
            r.best_wsr = w;
            r.best_phi = phi;
        }
    }
    r.evaluated_count = total;
    return r;
}

inline bool oracle_within_budget(const SystemConfig &cfg) { return cfg.N * cfg.bits <= oracle_bit_budget; }

} // namespace risq
