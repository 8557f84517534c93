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

#include "risq/quantizer.hpp"
#include "risq/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

using Catch::Approx;
using namespace risq;

namespace {

constexpr double pi = std::numbers::pi;

QuantizerParams params(int bits, double c, std::vector<double> rho)
{
    QuantizerParams p{bits, c, std::move(rho)};
    p.validate();
    return p;
}

} // namespace

TEST_CASE("quantizer - Parameters")
{
    const auto p1 = QuantizerParams::uniform(1, 1.0);
    CHECK(p1.levels() == 2);
    CHECK(p1.amplitude() == pi / 2);
    CHECK(p1.full_scale() == Approx(pi));
    REQUIRE(p1.rho.size() == 1);
    CHECK(p1.rho[0] == Approx(pi / 2));

    const auto p3 = QuantizerParams::uniform(3, 2.0);
    CHECK(p3.amplitude() == pi / 8);
    CHECK(p3.rho.size() == 7);
    CHECK(p3.delta_w() == Approx(pi / 4));

    CHECK_THROWS_AS(params(2, 0.0, {1, 2, 3}), domain_error);
    CHECK_THROWS_AS(params(2, -1.0, {1, 2, 3}), domain_error);
    CHECK_THROWS_AS(params(2, 1.0, {1, 2}), validation_error);
    CHECK_THROWS_AS(params(0, 1.0, {}), validation_error);
}

TEST_CASE("quantizer - Soft quantizer values")
{
    const auto p1 = params(1, 1.0, {0.4});
    CHECK(soft_quantize(0.4, p1) == Approx(pi / 2));
    CHECK(soft_quantize(-1e6, p1) == Approx(0.0).margin(1e-15));
    CHECK(soft_quantize(1e6, p1) == Approx(pi));

    const auto p2 = params(2, 100.0, {1, 2, 3});
    CHECK(soft_quantize(2.0, p2) == Approx(3 * pi / 4).epsilon(1e-12));
    CHECK(soft_quantize(2.0, p2) == Approx(2.3562).margin(1e-4));
    CHECK(soft_quantize(1e9, p2) == Approx(3 * pi / 2));

    // monotone and bounded
    Rng rng = make_rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    const auto p = params(2, 1.7, {0.5, -1.0, 2.5});
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng), y = x + std::abs(u(rng)) * 0.01 + 1e-6;
        CHECK(soft_quantize(x, p) < soft_quantize(y, p));
        CHECK(soft_quantize(x, p) >= 0.0);
        CHECK(soft_quantize(x, p) <= p.full_scale());
    }
}

TEST_CASE("quantizer - Soft quantizer gradient")
{
    const auto p1 = params(1, 1.0, {0.0});
    CHECK(soft_quantize_grad(0.0, p1).d_dx == Approx(pi / 2)); // a c at the boundary
    CHECK(soft_quantize_grad(10.0, p1).d_dx == Approx(4 * (pi / 2) * std::exp(-20.0)).epsilon(1e-6));
    CHECK(soft_quantize_grad(10.0, p1).d_dx == Approx(1.3e-8).epsilon(0.05));

    // no overflow far from the boundaries
    const auto far = soft_quantize_grad(1e5, params(1, 50.0, {0.0}));
    CHECK(std::isfinite(far.d_dx));
    CHECK(far.d_dx == 0.0);
    CHECK(std::isfinite(far.d_drho[0]));

    // finite-difference oracle in x and every rho
    Rng rng = make_rng(2);
    std::uniform_real_distribution<double> u(-4, 4), uc(0.2, 5);
    const double h = 1e-6;
    for (int t = 0; t < 1000; ++t) {
        const int bits = 1 + t % 3;
        QuantizerParams p{bits, uc(rng), {}};
        for (int i = 1; i < p.levels(); ++i)
            p.rho.push_back(u(rng));
        const double x = u(rng);
        const auto g = soft_quantize_grad(x, p);
        const double fd = (soft_quantize(x + h, p) - soft_quantize(x - h, p)) / (2 * h);
        CHECK(g.d_dx == Approx(fd).epsilon(1e-5).margin(1e-9));
        for (std::size_t i = 0; i < p.rho.size(); ++i) {
            auto pp = p, pm = p;
            pp.rho[i] += h;
            pm.rho[i] -= h;
            const double fdr = (soft_quantize(x, pp) - soft_quantize(x, pm)) / (2 * h);
            CHECK(g.d_drho[i] == Approx(fdr).epsilon(1e-5).margin(1e-9));
        }
    }
}

TEST_CASE("quantizer - Hard quantizer")
{
    const auto p1 = params(1, 1.0, {pi / 2});
    CHECK(hard_quantize(0.3, p1) == 0.0);
    CHECK(hard_quantize(2.0, p1) == Approx(pi));
    CHECK(hard_quantize(pi / 2, p1) == Approx(pi)); // ties go up
    CHECK(hard_level(pi / 2, p1) == 1);

    const auto p2 = params(2, 100.0, {1, 2, 3});
    CHECK(hard_quantize(2.5, p2) == Approx(pi).epsilon(1e-12));
    CHECK(hard_quantize(0.5, p2) == 0.0);
    CHECK(hard_quantize(3.5, p2) == Approx(3 * pi / 2));
    CHECK(hard_level(2.0, p2) == 2);
    CHECK(hard_level(1.999, p2) == 1);

    // boundaries are re-sorted on use
    const auto shuffled = params(2, 100.0, {3, 1, 2});
    for (double x : {0.2, 1.5, 2.5, 3.7})
        CHECK(hard_quantize(x, shuffled) == hard_quantize(x, p2));

    // exactly B output values; hard_phase lands on the grid
    Rng rng = make_rng(4);
    std::uniform_real_distribution<double> u(-3, 7);
    const auto p = params(2, 0.8, {0.3, 2.2, 4.0});
    std::set<double> values;
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng);
        values.insert(hard_quantize(x, p));
        const double ph = hard_phase(x, p);
        CHECK(ph == hard_level(x, p) * p.delta_w());
        CHECK(ph >= 0.0);
        CHECK(ph < 2 * pi);
    }
    CHECK(values.size() == 4);
}

TEST_CASE("quantizer - Soft approaches hard for steep tanh")
{
    for (int bits : {1, 2}) {
        const auto p = QuantizerParams::uniform(bits, 100.0);
        double sup = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double x = -1.0 + (2 * pi + 2.0) * i / 9999.0;
            bool near = false;
            for (double r : p.rho)
                near = near || std::abs(x - r) <= 0.1;
            if (!near)
                sup = std::max(sup, std::abs(soft_quantize(x, p) - hard_quantize(x, p)));
        }
        CHECK(sup < 1e-3);
    }
}

TEST_CASE("quantizer - Penalty")
{
    const auto p1 = params(1, 1.0, {0.7});
    CHECK(penalty(0.7, p1) == Approx(pi / 2));
    CHECK(penalty(0.7 + 50.0, p1) == Approx(0.6597).margin(1e-4));
    CHECK(penalty(0.7 - 50.0, p1) == Approx(4 * (pi / 2) / std::pow(std::exp(1.0) + std::exp(-1.0), 2)));
    CHECK(penalty(0.7, p1) > penalty(3.0, p1));

    // bounds and gradient oracle
    Rng rng = make_rng(5);
    std::uniform_real_distribution<double> u(-6, 6), uc(0.3, 4);
    const double h = 1e-6;
    for (int t = 0; t < 500; ++t) {
        const int bits = 1 + t % 3;
        QuantizerParams p{bits, uc(rng), {}};
        for (int i = 1; i < p.levels(); ++i)
            p.rho.push_back(u(rng));
        const double x = u(rng);
        const double a = p.amplitude(), c = p.c;
        const double terms = p.levels() - 1;
        const double lo = terms * 4 * a * c / std::pow(std::exp(1.0) + std::exp(-1.0), 2);
        CHECK(penalty(x, p) <= terms * a * c + 1e-12);
        CHECK(penalty(x, p) >= lo - 1e-12);

        const auto g = penalty_grad(x, p);
        CHECK(g.d_dx == Approx((penalty(x + h, p) - penalty(x - h, p)) / (2 * h)).epsilon(1e-5).margin(1e-9));
        for (std::size_t i = 0; i < p.rho.size(); ++i) {
            auto pp = p, pm = p;
            pp.rho[i] += h;
            pm.rho[i] -= h;
            CHECK(g.d_drho[i] == Approx((penalty(x, pp) - penalty(x, pm)) / (2 * h)).epsilon(1e-5).margin(1e-9));
        }
    }
}

TEST_CASE("quantizer - Gap")
{
    CHECK(gap(5.0, 5.0) == 0.0);
    CHECK(gap(5.0, 4.75) == Approx(0.05));
    CHECK(gap(5.0, 5.5) == Approx(-0.1));
    CHECK_THROWS_AS(gap(0.0, 1.0), domain_error);
    CHECK_THROWS_AS(gap(-1.0, 1.0), domain_error);
}
