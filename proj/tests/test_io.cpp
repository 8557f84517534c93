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

#include "support.hpp"

#include <filesystem>
#include <fstream>

using Catch::Approx;
using namespace risq;
using risq::testing::tiny_system;

namespace {

std::filesystem::path scratch_dir(const std::string &name)
{
    auto dir = std::filesystem::temp_directory_path() / ("risq_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

FitResult small_fit()
{
    SystemConfig sys = tiny_system(4, 2, 2, 2);
    const auto train = generate_samples(sys, 40, 0.0, 1);
    const auto val = generate_samples(sys, 8, 0.0, 2);
    TrainConfig cfg;
    cfg.batch_size = 20;
    cfg.max_epochs = 3;
    cfg.c = 2.5;
    return fit(train, val, sys, cfg);
}

} // namespace

TEST_CASE("io - Checkpoint round trip")
{
    const auto sys = tiny_system(4, 2, 2, 2);
    const auto f = small_fit();
    const auto ck = make_checkpoint(sys, f);
    const auto text = serialize_checkpoint(ck);
    const auto back = parse_checkpoint(text);
    CHECK(serialize_checkpoint(back) == text);

    const auto &a = ck.model.params, &b = back.model.params;
    for (int l = 0; l < dense_layer_count; ++l) {
        CHECK(a.dense[l].weight == b.dense[l].weight);
        CHECK(a.dense[l].bias == b.dense[l].bias);
    }
    for (int l = 0; l < norm_layer_count; ++l) {
        CHECK(a.norm[l].running_var == b.norm[l].running_var);
        CHECK(a.norm[l].scale == b.norm[l].scale);
    }
    CHECK(a.quantizer.rho == b.quantizer.rho);
    CHECK(b.quantizer.c == 2.5);
    CHECK(back.model.standardizer.mean == ck.model.standardizer.mean);
    CHECK(back.meta.epoch == f.meta.epoch);
    CHECK(back.meta.best_val_wsr_hard == f.meta.best_val_wsr_hard);
    CHECK(back.config.N == 4);

    // the restored model predicts bit for bit the same
    const auto samples = generate_samples(sys, 5, 0.0, 9);
    const auto p1 = predict_solutions(ck.model, samples, sys, QuantizeMode::hard);
    const auto p2 = predict_solutions(back.model, samples, sys, QuantizeMode::hard);
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(p1[i].rates.wsr == p2[i].rates.wsr);

    const auto dir = scratch_dir("ck");
    write_checkpoint((dir / "c.json").string(), ck);
    CHECK(serialize_checkpoint(read_checkpoint((dir / "c.json").string())) == text);
    CHECK_THROWS_AS(read_checkpoint((dir / "missing.json").string()), io_error);
    CHECK_THROWS_AS(parse_checkpoint("{"), io_error);
    CHECK_THROWS_AS(parse_checkpoint(R"({"format":"other"})"), io_error);
    auto j = nlohmann::json::parse(text);
    j["tensors"].erase(0);
    CHECK_THROWS_AS(parse_checkpoint(j.dump()), io_error);
}

TEST_CASE("io - History CSV")
{
    const auto f = small_fit();
    const auto csv = history_csv(f.history);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "epoch,lr,train_loss,val_wsr_soft,val_wsr_hard,mean_f_cons,gap");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 6);
        CHECK(line.find("nan") == std::string::npos);
        CHECK(line.find("inf") == std::string::npos);
    }
    CHECK(rows == static_cast<int>(f.history.size()));
}

TEST_CASE("io - Config text")
{
    const auto entries = parse_config_text(R"(
# comment
[system]
N = 8      ; trailing comment
pt_dbm = 10
q = 1, 2

[training]
loss = averaged_penalized
lambda=0.25
sweep.values = 1,2
)");
    REQUIRE(entries.size() == 6);
    CHECK(entries[0].key == "system.N");
    CHECK(entries[0].value == "8");
    CHECK(entries[3].key == "training.loss");
    CHECK(entries[5].key == "training.sweep.values");

    ExperimentConfig cfg;
    for (const auto &e : std::span(entries).first(5))
        apply_entry(cfg, e);
    CHECK(cfg.system.N == 8);
    CHECK(cfg.system.pt_dbm == 10.0);
    CHECK(cfg.system.pt == Approx(0.01));
    CHECK(cfg.system.q == std::vector<double>{1.0, 2.0});
    CHECK(cfg.training.loss == LossKind::averaged_penalized);
    CHECK(cfg.training.lambda == 0.25);
    CHECK_THROWS_AS(apply_entry(cfg, entries[5]), validation_error);

    // bare dotted keys work without a section
    CHECK(parse_config_text("sweep.axis = eta")[0].key == "sweep.axis");
    CHECK_THROWS_AS(parse_config_text("N = 3"), validation_error);
    CHECK_THROWS_AS(parse_config_text("[system\nN=3"), validation_error);
    CHECK_THROWS_AS(parse_config_text("[system]\nN"), validation_error);
    CHECK_THROWS_AS(apply_entry(cfg, {"system.N", "eight"}), validation_error);
    CHECK_THROWS_AS(apply_entry(cfg, {"system.N", "8.5"}), validation_error);
    CHECK_THROWS_AS(apply_entry(cfg, {"training.scale", "huge"}), validation_error);
    CHECK_THROWS_AS(parse_override("system.N"), validation_error);
    const auto o = parse_override(" system.K = 3 ");
    CHECK(o.key == "system.K");
    CHECK(o.value == "3");

    // every documented key is accepted by the parser
    const auto ref = config_reference();
    for (const auto &[k, v] : detail::config_keys()) {
        CHECK(ref.find(k + ": ") != std::string::npos);
        CHECK_FALSE(v.second.empty());
    }
}

TEST_CASE("io - Config resolution")
{
    const auto dir = scratch_dir("cfg");
    const auto path = (dir / "run.ini").string();
    write_file_atomic(path, "[system]\nN = 8\nbits = 2\n[training]\nscale = full\nlr = 0.002\n");
    const auto cfg = resolve_config(path, {"system.N=12", "channel.eta=0.3"});
    CHECK(cfg.system.N == 12);
    CHECK(cfg.system.bits == 2);
    CHECK(cfg.eta == 0.3);
    CHECK(cfg.training.batch_size == 1024);
    CHECK(cfg.training.max_epochs == 1500);
    CHECK(cfg.training.lr == 0.002);

    CHECK_THROWS_AS(resolve_config(path, {"system.K=0"}), validation_error);
    CHECK_THROWS_AS(resolve_config(path, {"quantizer.c=-1"}), domain_error);
    CHECK_THROWS_AS(resolve_config((dir / "nope.ini").string(), {}), io_error);

    // JSON round trip of the resolved configuration
    const auto j = to_json_value(cfg);
    const auto back = experiment_config_from_json(j);
    CHECK(to_json_value(back) == j);
    CHECK(back.system.pt == cfg.system.pt);
    CHECK(back.training.batch_size == 1024);
    CHECK(train_config_from_json(to_json_value(cfg.training)).lr == 0.002);
}

TEST_CASE("io - Dataset and sweep helpers")
{
    CHECK(parse_sweep_axis(to_string(SweepAxis::eta)) == SweepAxis::eta);
    CHECK(parse_sweep_axis("N") == SweepAxis::N);
    CHECK(parse_sweep_axis("pt_dbm") == SweepAxis::pt_dbm);
    CHECK_THROWS_AS(parse_sweep_axis("bits"), validation_error);

    const auto sys = tiny_system(4, 2, 2, 1);
    const auto ds = generate_dataset(sys, 3, 0.2, 7);
    const auto text = serialize_dataset(ds);
    CHECK(serialize_dataset(parse_dataset(text)) == text);
}
