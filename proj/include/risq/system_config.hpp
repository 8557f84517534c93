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
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace risq {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2 &a, const Point2 &b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Planar scenario layout in metres.
struct Geometry {
    Point2 ap{0.0, 0.0};
    Point2 ris{50.0, 0.0};
    Point2 user_center{50.0, 10.0};
    double user_radius = 2.0;
};

// All scenario constants. Powers are kept in both dBm and watts; the watt
// values are derived exactly once through set_pt_dbm / set_sigma2_dbm.
struct SystemConfig {
    int M = 4;  // AP antennas
    int N = 16; // RIS elements
    int Nx = 0; // RIS columns; 0 means N x 1
    int Ny = 0; // RIS rows
    int K = 2;  // users
    int bits = 1;

    double pt_dbm = 5.0;
    double pt = dbm_to_watts(5.0);
    double sigma2_dbm = -100.0;
    double sigma2 = dbm_to_watts(-100.0);

    std::vector<double> q; // user weights; empty means all ones

    double beta0_db = -35.6;
    double d0 = 1.0;
    double p_exp = 2.2;
    double kappa_G = 10.0;
    double kappa_r = 10.0;

    Geometry geometry{};

    void set_pt_dbm(double dbm)
    {
        pt_dbm = dbm;
        pt = dbm_to_watts(dbm);
    }
    void set_sigma2_dbm(double dbm)
    {
        sigma2_dbm = dbm;
        sigma2 = dbm_to_watts(dbm);
    }

    int levels() const { return 1 << bits; }
    double delta_w() const { return 2.0 * std::numbers::pi / levels(); }
    int rows() const { return Ny > 0 ? Ny : 1; }
    int cols() const { return Nx > 0 ? Nx : N; }

    std::vector<double> weights() const { return q.empty() ? std::vector<double>(K, 1.0) : q; }

    void validate() const
    {
        detail::require(M >= 1, "M must be >= 1");
        detail::require(N >= 1, "N must be >= 1");
        detail::require(K >= 1, "K must be >= 1");
        detail::require(bits >= 1 && bits <= 16, "bits must be in [1, 16]");
        detail::require(cols() * rows() == N, "Nx * Ny must equal N");
        detail::require(pt > 0.0 && std::isfinite(pt), "Pt must be positive");
        detail::require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma2 must be positive");
        detail::require(q.empty() || static_cast<int>(q.size()) == K, "q must have K entries");
        for (double w : q)
            detail::require(w > 0.0, "user weights must be positive");
        detail::require(d0 > 0.0, "d0 must be positive");
        detail::require(kappa_G >= 0.0 && kappa_r >= 0.0, "Rician factors must be non-negative");
        detail::require(geometry.user_radius >= 0.0, "user radius must be non-negative");
    }
};

inline void to_json(nlohmann::json &j, const Point2 &p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json &j, Point2 &p)
{
    p.x = j.at(0).get<double>();
    p.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json &j, const SystemConfig &c)
{
    j = nlohmann::json{{"M", c.M},
                       {"N", c.N},
                       {"Nx", c.cols()},
                       {"Ny", c.rows()},
                       {"K", c.K},
                       {"bits", c.bits},
                       {"pt_dbm", c.pt_dbm},
                       {"pt_w", c.pt},
                       {"sigma2_dbm", c.sigma2_dbm},
                       {"sigma2_w", c.sigma2},
                       {"q", c.weights()},
                       {"beta0_db", c.beta0_db},
                       {"d0", c.d0},
                       {"p_exp", c.p_exp},
                       {"kappa_G", c.kappa_G},
                       {"kappa_r", c.kappa_r},
                       {"ap", c.geometry.ap},
                       {"ris", c.geometry.ris},
                       {"user_center", c.geometry.user_center},
                       {"user_radius", c.geometry.user_radius}};
}

inline void from_json(const nlohmann::json &j, SystemConfig &c)
{
    c.M = j.at("M").get<int>();
    c.N = j.at("N").get<int>();
    c.Nx = j.value("Nx", 0);
    c.Ny = j.value("Ny", 0);
    c.K = j.at("K").get<int>();
    c.bits = j.at("bits").get<int>();
    c.set_pt_dbm(j.at("pt_dbm").get<double>());
    c.set_sigma2_dbm(j.at("sigma2_dbm").get<double>());
    c.q = j.value("q", std::vector<double>{});
    c.beta0_db = j.at("beta0_db").get<double>();
    c.d0 = j.at("d0").get<double>();
    c.p_exp = j.at("p_exp").get<double>();
    c.kappa_G = j.at("kappa_G").get<double>();
    c.kappa_r = j.at("kappa_r").get<double>();
    c.geometry.ap = j.at("ap").get<Point2>();
    c.geometry.ris = j.at("ris").get<Point2>();
    c.geometry.user_center = j.at("user_center").get<Point2>();
    c.geometry.user_radius = j.at("user_radius").get<double>();
}

} // namespace risq
