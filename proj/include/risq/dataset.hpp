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

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "channel.hpp"
#include "io.hpp"
#include "system_config.hpp"

namespace risq {

inline constexpr int dataset_format_version = 1;

// JSON-lines dataset: one header record, then one record per sample.
// Complex entries are [re, im] pairs; G is stored row-major (N rows of M).
struct Dataset {
    SystemConfig config;
    double eta = 0.0;
    std::uint64_t seed = 0;
    std::vector<ChannelSample> samples;
};

inline Dataset generate_dataset(const SystemConfig &cfg, int count, double eta, std::uint64_t seed)
{
    return Dataset{cfg, eta, seed, generate_samples(cfg, count, eta, seed)};
}

namespace detail {

inline nlohmann::json complex_pair(std::complex<double> z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline std::complex<double> parse_complex(const nlohmann::json &j)
{
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline nlohmann::json sample_record(const ChannelSample &s, std::size_t index)
{
    nlohmann::json g = nlohmann::json::array();
    for (Eigen::Index r = 0; r < s.estimate.G.rows(); ++r)
        for (Eigen::Index c = 0; c < s.estimate.G.cols(); ++c)
            g.push_back(complex_pair(s.estimate.G(r, c)));
    nlohmann::json hs = nlohmann::json::array();
    for (const auto &h : s.estimate.h) {
        nlohmann::json hv = nlohmann::json::array();
        for (Eigen::Index n = 0; n < h.size(); ++n)
            hv.push_back(complex_pair(h(n)));
        hs.push_back(std::move(hv));
    }
    return {{"type", "sample"}, {"index", index},         {"seed", s.seed}, {"eta", s.eta},
            {"perfect_csi", s.perfect_csi()}, {"users", s.users}, {"G", std::move(g)}, {"h", std::move(hs)}};
}

inline ChannelSample parse_sample(const nlohmann::json &j, const SystemConfig &cfg)
{
    ChannelSample s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.eta = j.at("eta").get<double>();
    s.users = j.at("users").get<std::vector<Point2>>();
    const auto &g = j.at("G");
    detail::require(g.size() == static_cast<std::size_t>(cfg.N * cfg.M), "dataset: G has wrong size");
    s.estimate.G.resize(cfg.N, cfg.M);
    for (int r = 0; r < cfg.N; ++r)
        for (int c = 0; c < cfg.M; ++c)
            s.estimate.G(r, c) = parse_complex(g.at(r * cfg.M + c));
    const auto &hs = j.at("h");
    detail::require(hs.size() == static_cast<std::size_t>(cfg.K), "dataset: wrong number of user channels");
    for (const auto &hv : hs) {
        detail::require(hv.size() == static_cast<std::size_t>(cfg.N), "dataset: user channel has wrong size");
        Eigen::VectorXcd h(cfg.N);
        for (int n = 0; n < cfg.N; ++n)
            h(n) = parse_complex(hv.at(n));
        s.estimate.h.push_back(std::move(h));
    }
    return s;
}

} // namespace detail

inline std::string serialize_dataset(const Dataset &ds)
{
    std::ostringstream out;
    const nlohmann::json header = {{"type", "header"},
                                   {"format", "risq-dataset"},
                                   {"format_version", dataset_format_version},
                                   {"config", ds.config},
                                   {"count", ds.samples.size()},
                                   {"eta", ds.eta},
                                   {"seed", ds.seed},
                                   {"perfect_csi", ds.eta == 0.0}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        out << detail::sample_record(ds.samples[i], i).dump() << '\n';
    return out.str();
}

inline void write_dataset(const std::filesystem::path &path, const Dataset &ds)
{
    write_file_atomic(path, serialize_dataset(ds));
}

inline Dataset parse_dataset(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    Dataset ds;
    try {
        if (!std::getline(in, line))
            throw io_error("dataset: empty file");
        const auto header = nlohmann::json::parse(line);
        if (header.value("format", "") != "risq-dataset")
            throw io_error("dataset: not a risq dataset");
        if (header.at("format_version").get<int>() != dataset_format_version)
            throw io_error("dataset: unsupported format version");
        ds.config = header.at("config").get<SystemConfig>();
        ds.config.validate();
        ds.eta = header.at("eta").get<double>();
        ds.seed = header.at("seed").get<std::uint64_t>();
        const auto count = header.at("count").get<std::size_t>();
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            ds.samples.push_back(detail::parse_sample(nlohmann::json::parse(line), ds.config));
        }
        if (ds.samples.size() != count)
            throw io_error("dataset: header count does not match records");
    } catch (const nlohmann::json::exception &e) {
        throw io_error(std::string("dataset: malformed record: ") + e.what());
    }
    return ds;
}

inline Dataset read_dataset(const std::filesystem::path &path) { return parse_dataset(read_file(path)); }

} // namespace risq
