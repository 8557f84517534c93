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

#include <catch_amalgamated.hpp>

#include "risq/linkmath.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using Catch::Approx;
using namespace risq;

namespace {

using cd = std::complex<double>;

Channels random_channels(int n, int m, int k, Rng &rng)
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
        ch.h.push_back(h);
    }
    return ch;
}

Eigen::MatrixXcd random_matrix(int r, int c, Rng &rng)
{
    Eigen::MatrixXcd x(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            x(i, j) = complex_normal(rng);
    return x;
}

} // namespace

TEST_CASE("linkmath - Reflection coefficients")
{
    Eigen::VectorXd phi(4);
    phi << 0.0, std::numbers::pi / 2, std::numbers::pi, -7.3;
    const auto s = phases_to_theta(phi);
    CHECK(std::abs(s.theta(0) - cd(1, 0)) < 1e-15);
    CHECK(std::abs(s.theta(1) - cd(0, 1)) < 1e-15);
    CHECK(std::abs(s.theta(2) - cd(-1, 0)) < 1e-15);
    for (int n = 0; n < 4; ++n)
        CHECK(std::abs(std::abs(s.theta(n)) - 1.0) < 1e-12);
}

TEST_CASE("linkmath - Precoder normalisation")
{
    Eigen::MatrixXcd w(2, 1);
    w << cd(2, 0), cd(0, 0);
    CHECK(normalize_precoder(w, 4.0).norm() == Approx(2.0).epsilon(1e-15));
    CHECK(normalize_precoder(w, 4.0).isApprox(w, 1e-15)); // already on the constraint set

    Rng rng = make_rng(3);
    const auto x = random_matrix(4, 3, rng);
    const auto once = normalize_precoder(x, 0.7);
    CHECK(once.norm() == Approx(std::sqrt(0.7)).epsilon(1e-12));
    CHECK(normalize_precoder(once, 0.7).isApprox(once, 1e-14));

    CHECK_THROWS_AS(normalize_precoder(Eigen::MatrixXcd::Zero(2, 2), 1.0), degenerate_input_error);
}

TEST_CASE("linkmath - Effective channel")
{
    // identity reflection, N = 1
    Eigen::VectorXcd h(1), theta(1);
    h << cd(0.5, 2.0);
    theta << cd(1, 0);
    Eigen::MatrixXcd G(1, 3);
    G << cd(1, 1), cd(0, -2), cd(3, 0);
    CHECK(effective_channel(h, theta, G).isApprox(std::conj(h(0)) * G.row(0), 1e-15));
    CHECK(effective_channel(h, theta, Eigen::MatrixXcd::Zero(1, 3)).norm() == 0.0);

    // N = 2, h = (1, 1), G = (1, -1)^T, phi = (0, pi) -> 2
    Eigen::VectorXcd h2(2);
    h2 << 1.0, 1.0;
    Eigen::MatrixXcd G2(2, 1);
    G2 << 1.0, -1.0;
    Eigen::VectorXd phi(2);
    phi << 0.0, std::numbers::pi;
    const auto e = effective_channel(h2, phases_to_theta(phi).theta, G2);
    CHECK(std::abs(e(0) - cd(2, 0)) < 1e-12);

    CHECK_THROWS_AS(effective_channel(h2, theta, G2), validation_error);
}

TEST_CASE("linkmath - SINR")
{
    Eigen::MatrixXcd E(1, 1), W(1, 1);
    E << 1.0;
    W << 1.0;
    CHECK(sinr(E, W, 1.0)(0) == Approx(1.0));
    CHECK(sinr(E, Eigen::MatrixXcd::Zero(1, 1), 1.0)(0) == 0.0);

    // |e1 w1|^2 = 4, |e1 w2|^2 = 1
    Eigen::MatrixXcd E2(2, 2), W2(2, 2);
    E2 << 1.0, 0.0, 0.0, 1.0;
    W2 << 2.0, 1.0, 0.0, 1.0;
    CHECK(sinr(E2, W2, 1.0)(0) == Approx(2.0));

    CHECK_THROWS_AS(sinr(E, W, 0.0), domain_error);
    CHECK_THROWS_AS(sinr(E, W, -1.0), domain_error);
    CHECK_THROWS_AS(sinr(E2, W, 1.0), validation_error);

    // K = 1: scaling W by s scales gamma by s^2
    Rng rng = make_rng(5);
    const auto e = random_matrix(1, 4, rng);
    const auto w = random_matrix(4, 1, rng);
    CHECK(sinr(e, 3.0 * w, 0.2)(0) == Approx(9.0 * sinr(e, w, 0.2)(0)).epsilon(1e-12));

    // K > 1: gamma grows with s towards the interference-limited value
    const auto Ek = random_matrix(2, 4, rng);
    const auto Wk = random_matrix(4, 2, rng);
    const double g1 = sinr(Ek, Wk, 0.5)(0), g2 = sinr(Ek, 2.0 * Wk, 0.5)(0), g3 = sinr(Ek, 1e6 * Wk, 0.5)(0);
    const Eigen::MatrixXd P = (Ek * Wk).cwiseAbs2();
    CHECK(g1 < g2);
    CHECK(g2 < g3);
    CHECK(g3 == Approx(P(0, 0) / P(0, 1)).epsilon(1e-9));
}

TEST_CASE("linkmath - Weighted sum rate")
{
    Eigen::VectorXd g(1);
    g << 1.0;
    const std::vector<double> q1{1.0};
    CHECK(wsr(g, q1) == Approx(1.0));
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(2);
    const std::vector<double> q2{1.0, 1.0};
    CHECK(wsr(g0, q2) == 0.0);
    Eigen::VectorXd g2(2);
    g2 << 1.0, 3.0;
    CHECK(wsr(g2, q2) == Approx(3.0));
    const std::vector<double> qw{0.5, 2.0};
    CHECK(wsr(g2, qw) == Approx(4.5));
    CHECK_THROWS_AS(wsr(g2, q1), validation_error);

    // monotone in every gamma
    Eigen::VectorXd g3 = g2;
    g3(1) += 0.1;
    CHECK(wsr(g3, q2) > wsr(g2, q2));
}

TEST_CASE("linkmath - Common phase rotation")
{
    Rng rng = make_rng(8);
    const auto ch = random_channels(5, 3, 2, rng);
    Eigen::VectorXd phi = Eigen::VectorXd::Random(5);
    const auto th = phases_to_theta(phi).theta;
    const auto W = random_matrix(3, 2, rng);
    const double alpha = 0.77;
    const Eigen::VectorXcd rotated = th * std::polar(1.0, alpha);
    const Eigen::MatrixXcd W_comp = W * std::polar(1.0, -alpha);
    const Eigen::MatrixXd a = (effective_channels(ch, th) * W).cwiseAbs();
    const Eigen::MatrixXd b = (effective_channels(ch, rotated) * W_comp).cwiseAbs();
    CHECK(a.isApprox(b, 1e-12));
    const std::vector<double> q{1.0, 1.0};
    CHECK(rate_report(ch, rotated, W, 0.1, q).wsr == Approx(rate_report(ch, th, W, 0.1, q).wsr).epsilon(1e-12));
}

TEST_CASE("linkmath - Rate report")
{
    Rng rng = make_rng(9);
    const auto ch = random_channels(4, 2, 2, rng);
    const auto th = phases_to_theta(Eigen::VectorXd::Random(4)).theta;
    const auto W = random_matrix(2, 2, rng);
    const std::vector<double> q{0.3, 1.7};
    const auto r = rate_report(ch, th, W, 0.4, q);
    REQUIRE(r.gamma.size() == 2);
    for (int k = 0; k < 2; ++k) {
        CHECK(r.gamma(k) >= 0.0);
        CHECK(r.rates(k) == Approx(std::log2(1.0 + r.gamma(k))));
    }
    CHECK(r.wsr == Approx(0.3 * r.rates(0) + 1.7 * r.rates(1)));
}

TEST_CASE("linkmath - WSR gradient matches finite differences")
{
    Rng rng = make_rng(21);
    const int N = 5, M = 3, K = 2;
    const auto ch = random_channels(N, M, K, rng);
    Eigen::VectorXd phi = Eigen::VectorXd::Random(N) * 3.0;
    const auto W = random_matrix(M, K, rng);
    const std::vector<double> q{0.8, 1.3};
    const double s2 = 0.3;
    const auto g = wsr_with_gradient(ch, phases_to_theta(phi).theta, W, s2, q);
    CHECK(g.wsr == Approx(rate_report(ch, phases_to_theta(phi).theta, W, s2, q).wsr).epsilon(1e-12));

    auto f_theta = [&](const Eigen::VectorXcd &t) { return rate_report(ch, t, W, s2, q).wsr; };
    auto f_w = [&](const Eigen::MatrixXcd &w) { return rate_report(ch, phases_to_theta(phi).theta, w, s2, q).wsr; };
    const double h = 1e-6;
    const auto th = phases_to_theta(phi).theta;
    // df = 2 Re(conj(g) dz): real step -> 2 Re g, imaginary step -> 2 Im g
    for (int n = 0; n < N; ++n) {
        for (cd step : {cd(h, 0), cd(0, h)}) {
            Eigen::VectorXcd tp = th, tm = th;
            tp(n) += step;
            tm(n) -= step;
            const double fd = (f_theta(tp) - f_theta(tm)) / (2 * h);
            const double an = 2.0 * (step.real() != 0 ? g.d_theta(n).real() : g.d_theta(n).imag());
            CHECK(an == Approx(fd).epsilon(1e-6).margin(1e-9));
        }
    }
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k)
            for (cd step : {cd(h, 0), cd(0, h)}) {
                Eigen::MatrixXcd wp = W, wm = W;
                wp(m, k) += step;
                wm(m, k) -= step;
                const double fd = (f_w(wp) - f_w(wm)) / (2 * h);
                const double an = 2.0 * (step.real() != 0 ? g.d_w(m, k).real() : g.d_w(m, k).imag());
                CHECK(an == Approx(fd).epsilon(1e-6).margin(1e-9));
            }
}
