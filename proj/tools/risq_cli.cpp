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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risq/risq.hpp"

int main(int argc, char **argv)
{
    CLI::App app{"risq: learned joint active/passive beamforming for RIS-assisted MISO downlink"};
    app.require_subcommand(1);

    risq::ExperimentSpec spec;
    std::uint64_t seed = 0;
    std::string manifest;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("-c,--config", spec.config_path, "Config file (flat key = value with [sections])")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", spec.out_dir, "Output directory")->capture_default_str();
        sub->add_option("-s,--seed", seed, "Seed for data generation and training");
        sub->add_option("--set", spec.overrides, "Override, section.key=value (repeatable)");
    };
    auto add_data = [&](CLI::App *sub) {
        sub->add_option("-d,--data", spec.data_dir, "Directory with train/val/test.jsonl from gen-data");
    };

    struct Command {
        const char *name;
        const char *help;
        bool data;
        bool checkpoint;
    };
    const Command commands[] = {
        {"gen-data", "Generate train/validation/test channel datasets", false, false},
        {"train", "Train a network with the configured loss", true, false},
        {"search-c", "Comparative search over the quantizer steepness c", true, false},
        {"idqnn", "Pre-train, derive lambda, train with the boundary penalty", true, false},
        {"eval", "Score a checkpoint against random and oracle baselines", true, true},
        {"sweep", "Train or evaluate along one axis (pt_dbm, N, eta)", false, true},
    };
    for (const auto &c : commands) {
        auto *sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        if (c.data)
            add_data(sub);
        if (c.checkpoint)
            sub->add_option("-k,--checkpoint", spec.checkpoint, "Checkpoint file");
    }
    auto *rerun = app.add_subcommand("rerun", "Replay a run from its manifest");
    rerun->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    rerun->add_option("-o,--out", spec.out_dir, "Output directory")->required();
    app.add_subcommand("keys", "List every config key with its unit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : risq::exit_validation;
    }

    auto *chosen = app.get_subcommands().front();
    spec.command = chosen->get_name();
    if (spec.command == "keys") {
        std::cout << risq::config_reference();
        return risq::exit_ok;
    }
    if (spec.command != "rerun" && chosen->count("--seed") > 0)
        spec.seed = seed;
    if (spec.command == "rerun")
        return risq::run_guarded(
            "rerun", [&] { risq::rerun_manifest(manifest, spec.out_dir, std::cerr); }, std::cerr);
    return risq::run_guarded(
        spec.command, [&] { risq::run_experiment(spec, std::cerr); }, std::cerr);
}
