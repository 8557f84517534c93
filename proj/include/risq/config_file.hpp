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
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "system_config.hpp"
#include "trainer.hpp"

namespace risq {

enum class SweepAxis { pt_dbm, N, eta };

inline std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::pt_dbm:
        return "pt_dbm";
    case SweepAxis::N:
        return "N";
    case SweepAxis::eta:
        return "eta";
    }
    return "pt_dbm";
}

inline SweepAxis parse_sweep_axis(const std::string &s)
{
    if (s == "pt_dbm" || s == "pt")
        return SweepAxis::pt_dbm;
    if (s == "N" || s == "n")
        return SweepAxis::N;
    if (s == "eta")
        return SweepAxis::eta;
    throw validation_error("unknown sweep axis: " + s);
}

// Whether eval adds the exhaustive-search column. `always` refuses instances
// beyond the enumeration budget instead of skipping them.
enum class OracleMode { automatic, always, never };

inline std::string to_string(OracleMode m)
{
    switch (m) {
    case OracleMode::automatic:
        return "auto";
    case OracleMode::always:
        return "always";
    case OracleMode::never:
        return "never";
    }
    return "auto";
}

inline OracleMode parse_oracle_mode(const std::string &s)
{
    if (s == "auto")
        return OracleMode::automatic;
    if (s == "always")
        return OracleMode::always;
    if (s == "never")
        return OracleMode::never;
    throw validation_error("unknown oracle mode: " + s);
}

struct SweepConfig {
    SweepAxis axis = SweepAxis::pt_dbm;
    std::vector<double> values;
    bool train = true; // false: evaluate a fixed checkpoint at every point
    bool parallel = false;
};

// Everything a run needs, after the config file and overrides are resolved.
struct ExperimentConfig {
    SystemConfig system;
    double eta = 0.0;
    int train_count = 5000;
    int val_count = 500;
    int test_count = 500;
    std::uint64_t data_seed = 1;
    TrainConfig training;
    double c_init = 1.0;
    int random_trials = 100;
    OracleMode oracle = OracleMode::automatic;
    SweepConfig sweep;

    void validate() const
    {
        system.validate();
        training.validate();
        detail::require(eta >= 0.0 && std::isfinite(eta), "eta must be non-negative");
        detail::require(train_count >= 1 && val_count >= 1 && test_count >= 1, "sample counts must be >= 1");
        if (!(c_init > 0.0))
            throw domain_error("c_init must be positive");
        detail::require(random_trials >= 1, "random_trials must be >= 1");
    }
};

namespace detail {

inline std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string &key, const std::string &v)
{
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception &) {
        throw validation_error("config: " + key + " expects a number, got '" + v + "'");
    }
}

inline long long parse_int(const std::string &key, const std::string &v)
{
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return i;
    } catch (const std::exception &) {
        throw validation_error("config: " + key + " expects an integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string &key, const std::string &v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw validation_error("config: " + key + " expects a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string &key, const std::string &v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(key, trim(item)));
    return out;
}

using Setter = std::function<void(ExperimentConfig &, const std::string &)>;

// Every accepted key with its unit.
inline const std::map<std::string, std::pair<Setter, std::string>> &config_keys()
{
    static const std::map<std::string, std::pair<Setter, std::string>> keys = [] {
        std::map<std::string, std::pair<Setter, std::string>> k;
        auto num = [&](const std::string &name, std::function<void(ExperimentConfig &, double)> f,
                       const std::string &doc) {
            k[name] = {[name, f](ExperimentConfig &c, const std::string &v) { f(c, parse_double(name, v)); }, doc};
        };
        auto integer = [&](const std::string &name, std::function<void(ExperimentConfig &, long long)> f,
                           const std::string &doc) {
            k[name] = {[name, f](ExperimentConfig &c, const std::string &v) { f(c, parse_int(name, v)); }, doc};
        };
        integer("system.M", [](auto &c, long long v) { c.system.M = static_cast<int>(v); }, "AP antennas");
        integer("system.N", [](auto &c, long long v) { c.system.N = static_cast<int>(v); }, "RIS elements");
        integer("system.Nx", [](auto &c, long long v) { c.system.Nx = static_cast<int>(v); },
                "RIS columns (0: N x 1)");
        integer("system.Ny", [](auto &c, long long v) { c.system.Ny = static_cast<int>(v); }, "RIS rows");
        integer("system.K", [](auto &c, long long v) { c.system.K = static_cast<int>(v); }, "users");
        integer("system.bits", [](auto &c, long long v) { c.system.bits = static_cast<int>(v); },
                "phase-shifter bits");
        num("system.pt_dbm", [](auto &c, double v) { c.system.set_pt_dbm(v); }, "transmit power budget, dBm");
        num("system.sigma2_dbm", [](auto &c, double v) { c.system.set_sigma2_dbm(v); }, "noise power, dBm");
        k["system.q"] = {[](ExperimentConfig &c, const std::string &v) { c.system.q = parse_list("system.q", v); },
                         "user weights, comma separated"};
        num("channel.beta0_db", [](auto &c, double v) { c.system.beta0_db = v; }, "path gain at d0, dB");
        num("channel.d0", [](auto &c, double v) { c.system.d0 = v; }, "reference distance, m");
        num("channel.p_exp", [](auto &c, double v) { c.system.p_exp = v; }, "path-loss exponent");
        num("channel.kappa_G", [](auto &c, double v) { c.system.kappa_G = v; }, "AP-RIS Rician factor");
        num("channel.kappa_r", [](auto &c, double v) { c.system.kappa_r = v; }, "RIS-user Rician factor");
        num("channel.ap_x", [](auto &c, double v) { c.system.geometry.ap.x = v; }, "AP x, m");
        num("channel.ap_y", [](auto &c, double v) { c.system.geometry.ap.y = v; }, "AP y, m");
        num("channel.ris_x", [](auto &c, double v) { c.system.geometry.ris.x = v; }, "RIS x, m");
        num("channel.ris_y", [](auto &c, double v) { c.system.geometry.ris.y = v; }, "RIS y, m");
        num("channel.user_x", [](auto &c, double v) { c.system.geometry.user_center.x = v; },
            "user circle centre x, m");
        num("channel.user_y", [](auto &c, double v) { c.system.geometry.user_center.y = v; },
            "user circle centre y, m");
        num("channel.user_radius", [](auto &c, double v) { c.system.geometry.user_radius = v; },
            "user circle radius, m");
        num("channel.eta", [](auto &c, double v) { c.eta = v; }, "normalised CSI error MSE");
        integer("channel.train_count", [](auto &c, long long v) { c.train_count = static_cast<int>(v); },
                "training samples");
        integer("channel.val_count", [](auto &c, long long v) { c.val_count = static_cast<int>(v); },
                "validation samples");
        integer("channel.test_count", [](auto &c, long long v) { c.test_count = static_cast<int>(v); },
                "test samples");
        integer("channel.seed", [](auto &c, long long v) { c.data_seed = static_cast<std::uint64_t>(v); },
                "data generation seed");
        num("quantizer.c", [](auto &c, double v) { c.training.c = v; }, "tanh steepness");
        num("quantizer.c_init", [](auto &c, double v) { c.c_init = v; }, "starting steepness of the c search");
        integer("training.batch_size", [](auto &c, long long v) { c.training.batch_size = static_cast<int>(v); },
                "batch size");
        integer("training.max_epochs", [](auto &c, long long v) { c.training.max_epochs = static_cast<int>(v); },
                "epoch cap");
        integer("training.patience", [](auto &c, long long v) { c.training.patience = static_cast<int>(v); },
                "early-stop patience, epochs");
        num("training.lr", [](auto &c, double v) { c.training.lr = v; }, "initial learning rate");
        num("training.plateau_factor", [](auto &c, double v) { c.training.plateau_factor = v; },
            "learning-rate shrink factor");
        integer("training.plateau_patience",
                [](auto &c, long long v) { c.training.plateau_patience = static_cast<int>(v); },
                "plateau patience, epochs");
        num("training.lr_floor", [](auto &c, double v) { c.training.lr_floor = v; }, "learning-rate floor");
        num("training.tau", [](auto &c, double v) { c.training.tau = v; }, "gap threshold");
        integer("training.J", [](auto &c, long long v) { c.training.J = static_cast<int>(v); },
                "error draws per sample");
        k["training.loss"] = {[](ExperimentConfig &c, const std::string &v) { c.training.loss = parse_loss_kind(v); },
                              "perfect | penalized | averaged | averaged_penalized"};
        num("training.lambda", [](auto &c, double v) { c.training.lambda = v; }, "penalty weight");
        integer("training.seed", [](auto &c, long long v) { c.training.seed = static_cast<std::uint64_t>(v); },
                "training seed");
        integer("training.random_trials", [](auto &c, long long v) { c.random_trials = static_cast<int>(v); },
                "random-baseline trials per sample");
        k["training.scale"] = {[](ExperimentConfig &c, const std::string &v) {
                                   if (v == "full") {
                                       const auto keep = c.training;
                                       c.training = TrainConfig::full_scale();
                                       c.training.loss = keep.loss;
                                       c.training.lambda = keep.lambda;
                                       c.training.c = keep.c;
                                       c.training.seed = keep.seed;
                                       c.training.J = keep.J;
                                       c.training.tau = keep.tau;
                                   } else if (v != "desk") {
                                       throw validation_error("config: training.scale must be desk or full");
                                   }
                               },
                               "desk | full schedule preset (apply before other training keys)"};
        k["eval.oracle"] = {[](ExperimentConfig &c, const std::string &v) { c.oracle = parse_oracle_mode(v); },
                            "auto | always | never: exhaustive-search column (always refuses N*b > 20)"};
        k["sweep.axis"] = {[](ExperimentConfig &c, const std::string &v) { c.sweep.axis = parse_sweep_axis(v); },
                           "pt_dbm | N | eta"};
        k["sweep.values"] = {
            [](ExperimentConfig &c, const std::string &v) { c.sweep.values = parse_list("sweep.values", v); },
            "axis values, comma separated"};
        k["sweep.train"] = {
            [](ExperimentConfig &c, const std::string &v) { c.sweep.train = parse_bool("sweep.train", v); },
            "train per point (true) or evaluate a checkpoint (false)"};
        k["sweep.parallel"] = {
            [](ExperimentConfig &c, const std::string &v) { c.sweep.parallel = parse_bool("sweep.parallel", v); },
            "run sweep points concurrently"};
        return k;
    }();
    return keys;
}

} // namespace detail

// One "section.key=value" assignment.
struct ConfigEntry {
    std::string key;
    std::string value;
};

// Reads "[section]" headers and "key = value" lines; '#' and ';' start comments.
inline std::vector<ConfigEntry> parse_config_text(const std::string &text)
{
    std::vector<ConfigEntry> out;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw validation_error("config line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        if (section.empty() && key.find('.') == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + ": key outside a section");
        out.push_back({section.empty() ? key : section + "." + key, detail::trim(line.substr(eq + 1))});
    }
    return out;
}

inline ConfigEntry parse_override(const std::string &s)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos)
        throw validation_error("override must look like section.key=value: " + s);
    return {detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1))};
}

inline void apply_entry(ExperimentConfig &cfg, const ConfigEntry &e)
{
    const auto &keys = detail::config_keys();
    const auto it = keys.find(e.key);
    if (it == keys.end())
        throw validation_error("config: unknown key " + e.key);
    it->second.first(cfg, e.value);
}

// Defaults, then the file (if any), then overrides in order.
inline ExperimentConfig resolve_config(const std::string &config_path, const std::vector<std::string> &overrides)
{
    ExperimentConfig cfg;
    if (!config_path.empty())
        for (const auto &e : parse_config_text(read_file(config_path)))
            apply_entry(cfg, e);
    for (const auto &o : overrides)
        apply_entry(cfg, parse_override(o));
    cfg.validate();
    return cfg;
}

// Key reference, one "key: description" per line.
inline std::string config_reference()
{
    std::string out;
    for (const auto &[k, v] : detail::config_keys())
        out += k + ": " + v.second + "\n";
    return out;
}

inline nlohmann::json to_json_value(const TrainConfig &t)
{
    return {{"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},
            {"patience", t.patience},     {"lr", t.lr},
            {"plateau_factor", t.plateau_factor}, {"plateau_patience", t.plateau_patience},
            {"lr_floor", t.lr_floor},     {"tau", t.tau},
            {"J", t.J},                   {"loss", to_string(t.loss)},
            {"lambda", t.lambda},         {"c", t.c},
            {"seed", t.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json &j)
{
    TrainConfig t;
    t.batch_size = j.at("batch_size").get<int>();
    t.max_epochs = j.at("max_epochs").get<int>();
    t.patience = j.at("patience").get<int>();
    t.lr = j.at("lr").get<double>();
    t.plateau_factor = j.at("plateau_factor").get<double>();
    t.plateau_patience = j.at("plateau_patience").get<int>();
    t.lr_floor = j.at("lr_floor").get<double>();
    t.tau = j.at("tau").get<double>();
    t.J = j.at("J").get<int>();
    t.loss = parse_loss_kind(j.at("loss").get<std::string>());
    t.lambda = j.at("lambda").get<double>();
    t.c = j.at("c").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    return t;
}

inline nlohmann::json to_json_value(const ExperimentConfig &c)
{
    return {{"system", c.system},
            {"eta", c.eta},
            {"train_count", c.train_count},
            {"val_count", c.val_count},
            {"test_count", c.test_count},
            {"data_seed", c.data_seed},
            {"training", to_json_value(c.training)},
            {"c_init", c.c_init},
            {"random_trials", c.random_trials},
            {"oracle", to_string(c.oracle)},
            {"sweep",
             {{"axis", to_string(c.sweep.axis)},
              {"values", c.sweep.values},
              {"train", c.sweep.train},
              {"parallel", c.sweep.parallel}}}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json &j)
{
    try {
        ExperimentConfig c;
        c.system = j.at("system").get<SystemConfig>();
        c.eta = j.at("eta").get<double>();
        c.train_count = j.at("train_count").get<int>();
        c.val_count = j.at("val_count").get<int>();
        c.test_count = j.at("test_count").get<int>();
        c.data_seed = j.at("data_seed").get<std::uint64_t>();
        c.training = train_config_from_json(j.at("training"));
        c.c_init = j.at("c_init").get<double>();
        c.random_trials = j.at("random_trials").get<int>();
        c.oracle = parse_oracle_mode(j.at("oracle").get<std::string>());
        const auto &s = j.at("sweep");
        c.sweep.axis = parse_sweep_axis(s.at("axis").get<std::string>());
        c.sweep.values = s.at("values").get<std::vector<double>>();
        c.sweep.train = s.at("train").get<bool>();
        c.sweep.parallel = s.at("parallel").get<bool>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception &e) {
        throw validation_error(std::string("manifest config is malformed: ") + e.what());
    }
}

} // namespace risq
