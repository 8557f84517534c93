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
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "network.hpp"
#include "system_config.hpp"
#include "trainer.hpp"

namespace risq {

inline constexpr int checkpoint_format_version = 1;

struct Checkpoint {
    SystemConfig config;
    Model model;
    TrainMetadata meta;
};

namespace detail {

inline nlohmann::json tensor_json(const std::string &name, const double *data, Eigen::Index rows, Eigen::Index cols,
                                  bool col_major)
{
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(rows * cols));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            values.push_back(col_major ? data[c * rows + r] : data[r * cols + c]);
    return {{"name", name}, {"shape", {rows, cols}}, {"values", values}};
}

inline nlohmann::json tensor_json(const std::string &name, const Eigen::MatrixXd &m)
{
    return tensor_json(name, m.data(), m.rows(), m.cols(), true);
}

inline nlohmann::json tensor_json(const std::string &name, const Eigen::RowVectorXd &v)
{
    return tensor_json(name, v.data(), 1, v.size(), false);
}

using TensorMap = std::map<std::string, const nlohmann::json *>;

inline const nlohmann::json &find_tensor(const TensorMap &t, const std::string &name, Eigen::Index rows,
                                         Eigen::Index cols)
{
    const auto it = t.find(name);
    if (it == t.end())
        throw io_error("checkpoint: missing tensor " + name);
    const auto &j = *it->second;
    const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != rows || shape[1] != cols)
        throw io_error("checkpoint: tensor " + name + " has unexpected shape");
    if (j.at("values").size() != static_cast<std::size_t>(rows * cols))
        throw io_error("checkpoint: tensor " + name + " has wrong value count");
    return j.at("values");
}

inline Eigen::MatrixXd read_matrix(const TensorMap &t, const std::string &name, Eigen::Index rows, Eigen::Index cols)
{
    const auto &v = find_tensor(t, name, rows, cols);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = v[static_cast<std::size_t>(r * cols + c)].get<double>();
    return m;
}

inline Eigen::RowVectorXd read_row(const TensorMap &t, const std::string &name, Eigen::Index cols)
{
    return read_matrix(t, name, 1, cols).row(0);
}

} // namespace detail

inline nlohmann::json to_json_value(const TrainMetadata &m)
{
    return {{"seed", m.seed},
            {"epoch", m.epoch},
            {"best_val_loss", m.best_val_loss},
            {"best_val_wsr_soft", m.best_val_wsr_soft},
            {"best_val_wsr_hard", m.best_val_wsr_hard},
            {"best_val_fcons", m.best_val_fcons},
            {"loss", to_string(m.loss)},
            {"lambda", m.lambda},
            {"c", m.c}};
}

inline TrainMetadata metadata_from_json(const nlohmann::json &j)
{
    TrainMetadata m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epoch = j.at("epoch").get<int>();
    m.best_val_loss = j.at("best_val_loss").get<double>();
    m.best_val_wsr_soft = j.at("best_val_wsr_soft").get<double>();
    m.best_val_wsr_hard = j.at("best_val_wsr_hard").get<double>();
    m.best_val_fcons = j.at("best_val_fcons").get<double>();
    m.loss = parse_loss_kind(j.at("loss").get<std::string>());
    m.lambda = j.at("lambda").get<double>();
    m.c = j.at("c").get<double>();
    return m;
}

inline std::string serialize_checkpoint(const Checkpoint &ck)
{
    const auto &p = ck.model.params;
    nlohmann::json tensors = nlohmann::json::array();
    for (int l = 0; l < dense_layer_count; ++l) {
        const std::string base = "dense" + std::to_string(l);
        tensors.push_back(detail::tensor_json(base + ".weight", p.dense[l].weight));
        tensors.push_back(detail::tensor_json(base + ".bias", p.dense[l].bias));
    }
    for (int l = 0; l < norm_layer_count; ++l) {
        const std::string base = "bn" + std::to_string(l);
        tensors.push_back(detail::tensor_json(base + ".scale", p.norm[l].scale));
        tensors.push_back(detail::tensor_json(base + ".shift", p.norm[l].shift));
        tensors.push_back(detail::tensor_json(base + ".running_mean", p.norm[l].running_mean));
        tensors.push_back(detail::tensor_json(base + ".running_var", p.norm[l].running_var));
    }
    tensors.push_back(detail::tensor_json("input.mean", ck.model.standardizer.mean));
    tensors.push_back(detail::tensor_json("input.scale", ck.model.standardizer.scale));

    nlohmann::json j;
    j["format"] = "risq-checkpoint";
    j["format_version"] = checkpoint_format_version;
    j["config"] = ck.config;
    j["shape"] = {{"n", p.shape.n}, {"m", p.shape.m}, {"k", p.shape.k}};
    j["quantizer"] = {{"bits", p.quantizer.bits}, {"c", p.quantizer.c}, {"rho", p.quantizer.rho}};
    j["batch_norm"] = {{"momentum", p.momentum}, {"epsilon", p.epsilon}};
    j["tensors"] = std::move(tensors);
    j["metadata"] = to_json_value(ck.meta);
    return j.dump(1) + "\n";
}

inline Checkpoint parse_checkpoint(const std::string &text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format").get<std::string>() != "risq-checkpoint")
            throw io_error("checkpoint: not a checkpoint file");
        if (j.at("format_version").get<int>() != checkpoint_format_version)
            throw io_error("checkpoint: unsupported format version");
        Checkpoint ck;
        ck.config = j.at("config").get<SystemConfig>();
        auto &p = ck.model.params;
        p.shape = {j.at("shape").at("n").get<int>(), j.at("shape").at("m").get<int>(),
                   j.at("shape").at("k").get<int>()};
        p.quantizer.bits = j.at("quantizer").at("bits").get<int>();
        p.quantizer.c = j.at("quantizer").at("c").get<double>();
        p.quantizer.rho = j.at("quantizer").at("rho").get<std::vector<double>>();
        p.quantizer.validate();
        p.momentum = j.at("batch_norm").at("momentum").get<double>();
        p.epsilon = j.at("batch_norm").at("epsilon").get<double>();

        detail::TensorMap t;
        for (const auto &e : j.at("tensors"))
            t[e.at("name").get<std::string>()] = &e;
        const auto widths = p.shape.widths();
        for (int l = 0; l < dense_layer_count; ++l) {
            const std::string base = "dense" + std::to_string(l);
            p.dense[l].weight = detail::read_matrix(t, base + ".weight", p.shape.fan_in(l), widths[l]);
            p.dense[l].bias = detail::read_row(t, base + ".bias", widths[l]);
        }
        for (int l = 0; l < norm_layer_count; ++l) {
            const std::string base = "bn" + std::to_string(l);
            p.norm[l].scale = detail::read_row(t, base + ".scale", widths[l]);
            p.norm[l].shift = detail::read_row(t, base + ".shift", widths[l]);
            p.norm[l].running_mean = detail::read_row(t, base + ".running_mean", widths[l]);
            p.norm[l].running_var = detail::read_row(t, base + ".running_var", widths[l]);
        }
        ck.model.standardizer.mean = detail::read_row(t, "input.mean", p.shape.input_width());
        ck.model.standardizer.scale = detail::read_row(t, "input.scale", p.shape.input_width());
        ck.meta = metadata_from_json(j.at("metadata"));
        return ck;
    } catch (const nlohmann::json::exception &e) {
        throw io_error(std::string("checkpoint: malformed file: ") + e.what());
    }
}

inline void write_checkpoint(const std::string &path, const Checkpoint &ck)
{
    write_file_atomic(path, serialize_checkpoint(ck));
}

inline Checkpoint read_checkpoint(const std::string &path) { return parse_checkpoint(read_file(path)); }

inline Checkpoint make_checkpoint(const SystemConfig &cfg, const FitResult &fit) { return {cfg, fit.model, fit.meta}; }

// Epoch history as CSV: epoch,lr,train_loss,val_wsr_soft,val_wsr_hard,mean_f_cons,gap
inline std::string history_csv(const std::vector<EpochRecord> &history)
{
    std::ostringstream os;
    os.precision(17);
    os << "epoch,lr,train_loss,val_wsr_soft,val_wsr_hard,mean_f_cons,gap\n";
    for (const auto &e : history)
        os << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.val_wsr_soft << ',' << e.val_wsr_hard << ','
           << e.mean_fcons << ',' << e.gap << '\n';
    return os.str();
}

} // namespace risq
