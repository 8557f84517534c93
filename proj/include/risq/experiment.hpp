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
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "checkpoint.hpp"
#include "config_file.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "network.hpp"
#include "trainer.hpp"

namespace risq {

inline constexpr int manifest_format_version = 1;
inline constexpr const char *risq_version = "1.0.0";

struct ExperimentSpec {
    std::string command;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed; // sets both the data and the training seed
    std::vector<std::string> overrides;
    std::string data_dir;   // train/val/test.jsonl from gen-data; generated in memory when empty
    std::string checkpoint; // eval, and sweeps with sweep.train=false
};

// Process exit status for each error family.
enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_validation = 2, exit_io = 3, exit_budget = 4 };

namespace detail {

inline std::filesystem::path out_path(const ExperimentSpec &spec, const std::string &name)
{
    return std::filesystem::path(spec.out_dir) / name;
}

inline std::string csv_number(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace detail

// Resolves the config file, overrides and seed into one configuration.
inline ExperimentConfig resolve_spec(const ExperimentSpec &spec)
{
    auto cfg = resolve_config(spec.config_path, spec.overrides);
    if (spec.seed) {
        cfg.data_seed = *spec.seed;
        cfg.training.seed = *spec.seed;
    }
    return cfg;
}

struct Splits {
    std::vector<ChannelSample> train, val, test;
};

// Split seeds are fixed offsets of the data seed so each split is reproducible on its own.
inline Splits generate_splits(const ExperimentConfig &cfg)
{
    return {generate_samples(cfg.system, cfg.train_count, cfg.eta, derive_seed(cfg.data_seed, 0)),
            generate_samples(cfg.system, cfg.val_count, cfg.eta, derive_seed(cfg.data_seed, 1)),
            generate_samples(cfg.system, cfg.test_count, cfg.eta, derive_seed(cfg.data_seed, 2))};
}

// Loads splits written by gen-data; the dataset header then defines the system.
inline Splits load_splits(const std::string &dir, ExperimentConfig &cfg, bool need_test, std::ostream &log)
{
    const std::filesystem::path d(dir);
    Splits s;
    auto train = read_dataset(d / "train.jsonl");
    auto val = read_dataset(d / "val.jsonl");
    if (need_test)
        s.test = read_dataset(d / "test.jsonl").samples;
    if (nlohmann::json(train.config) != nlohmann::json(cfg.system) || train.eta != cfg.eta)
        log << "note: using the system configuration recorded in " << (d / "train.jsonl").string() << "\n";
    cfg.system = train.config;
    cfg.eta = train.eta;
    s.train = std::move(train.samples);
    s.val = std::move(val.samples);
    return s;
}

inline Splits obtain_splits(const ExperimentSpec &spec, ExperimentConfig &cfg, bool need_test, std::ostream &log)
{
    if (!spec.data_dir.empty())
        return load_splits(spec.data_dir, cfg, need_test, log);
    return generate_splits(cfg);
}

// Manifest: the command, its inputs, the fully resolved configuration and
// the artifacts it produced. rerun_manifest replays it.
inline nlohmann::json make_manifest(const ExperimentSpec &spec, const ExperimentConfig &cfg,
                                    const std::vector<std::string> &artifacts)
{
    return {{"format", "risq-manifest"},
            {"format_version", manifest_format_version},
            {"risq_version", risq_version},
            {"artifact_versions",
             {{"dataset", dataset_format_version},
              {"checkpoint", checkpoint_format_version},
              {"manifest", manifest_format_version}}},
            {"command", spec.command},
            {"config_path", spec.config_path},
            {"overrides", spec.overrides},
            {"seed", spec.seed ? nlohmann::json(*spec.seed) : nlohmann::json()},
            {"data_dir", spec.data_dir},
            {"checkpoint", spec.checkpoint},
            {"resolved", to_json_value(cfg)},
            {"artifacts", artifacts}};
}

inline void write_manifest(const ExperimentSpec &spec, const ExperimentConfig &cfg,
                           const std::vector<std::string> &artifacts)
{
    write_file_atomic(detail::out_path(spec, "manifest.json"), make_manifest(spec, cfg, artifacts).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Evaluation shared by eval and sweep.

struct EvalRow {
    std::size_t index = 0;
    double wsr_soft = 0.0;
    double wsr_hard = 0.0;
    double wsr_random = 0.0;
    double wsr_oracle = 0.0;
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    bool has_oracle = false;
    int draws = 1;
    double mean_soft = 0.0, mean_hard = 0.0, mean_random = 0.0, mean_oracle = 0.0;
};

// Solutions come from the estimates; every score is the mean WSR over the
// scoring channels (the estimate itself when eta = 0, else J true draws).
inline EvalSummary evaluate_model(const Model &model, std::span<const ChannelSample> samples, const SystemConfig &sys,
                                  int J, std::uint64_t seed, int random_trials, OracleMode oracle,
                                  std::ostream &log)
{
    detail::require(!samples.empty(), "evaluate: no test samples");
    const bool perfect = std::all_of(samples.begin(), samples.end(), [](const auto &s) { return s.perfect_csi(); });
    EvalSummary out;
    out.draws = perfect ? 1 : J;
    if (perfect && J > 1)
        log << "warning: eta = 0, scoring on the estimates with a single draw instead of J = " << J << "\n";
    if (oracle == OracleMode::always && !oracle_within_budget(sys))
        throw budget_error("evaluate: oracle requested but N*b = " + std::to_string(sys.N * sys.bits) +
                           " exceeds the enumeration budget of " + std::to_string(oracle_bit_budget));
    out.has_oracle = oracle != OracleMode::never && oracle_within_budget(sys);
    const auto rule = default_rule(sys.K);
    const auto q = sys.weights();
    const auto draws = scoring_draws(samples, J, derive_seed(seed, 3));
    const auto soft = predict_solutions(model, samples, sys, QuantizeMode::soft);
    const auto hard = predict_solutions(model, samples, sys, QuantizeMode::hard);

    auto mean_on = [&](std::size_t i, const Eigen::VectorXcd &theta, const Eigen::MatrixXcd &w) {
        double acc = 0.0;
        for (const auto &ch : draws[i])
            acc += rate_report(ch, theta, w, sys.sigma2, q).wsr;
        return acc / static_cast<double>(draws[i].size());
    };
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EvalRow r;
        r.index = i;
        r.wsr_soft = mean_on(i, soft[i].reflection.theta, soft[i].w);
        r.wsr_hard = mean_on(i, hard[i].reflection.theta, hard[i].w);
        Rng rng = make_rng(derive_seed(derive_seed(seed, 4), i));
        const auto rb = random_baseline(samples[i].estimate, sys, rng, random_trials, rule);
        r.wsr_random = mean_on(i, rb.reflection.theta, rb.w);
        if (out.has_oracle) {
            const auto o = exhaustive_oracle(samples[i].estimate, sys, rule);
            const auto sol = score_phases(samples[i].estimate, o.best_phi, sys, rule);
            r.wsr_oracle = mean_on(i, sol.reflection.theta, sol.w);
        }
        out.rows.push_back(r);
    }
    const double n = static_cast<double>(out.rows.size());
    for (const auto &r : out.rows) {
        out.mean_soft += r.wsr_soft / n;
        out.mean_hard += r.wsr_hard / n;
        out.mean_random += r.wsr_random / n;
        out.mean_oracle += r.wsr_oracle / n;
    }
    return out;
}

// Columns: index,wsr_soft,wsr_hard,wsr_random[,wsr_oracle]
inline std::string eval_csv(const EvalSummary &s)
{
    std::ostringstream os;
    os << "index,wsr_soft,wsr_hard,wsr_random" << (s.has_oracle ? ",wsr_oracle" : "") << "\n";
    for (const auto &r : s.rows) {
        os << r.index << ',' << detail::csv_number(r.wsr_soft) << ',' << detail::csv_number(r.wsr_hard) << ','
           << detail::csv_number(r.wsr_random);
        if (s.has_oracle)
            os << ',' << detail::csv_number(r.wsr_oracle);
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json summary_json(const EvalSummary &s)
{
    nlohmann::json j = {{"samples", s.rows.size()},
                        {"draws", s.draws},
                        {"mean_wsr_soft", s.mean_soft},
                        {"mean_wsr_hard", s.mean_hard},
                        {"mean_wsr_random", s.mean_random}};
    if (s.has_oracle)
        j["mean_wsr_oracle"] = s.mean_oracle;
    return j;
}

// ---------------------------------------------------------------------------
// Commands. Each writes its artifacts and manifest.json into spec.out_dir.

inline void cmd_gen_data(const ExperimentSpec &spec, const ExperimentConfig &cfg, std::ostream &log)
{
    const auto splits = generate_splits(cfg);
    const std::uint64_t seeds[] = {derive_seed(cfg.data_seed, 0), derive_seed(cfg.data_seed, 1),
                                   derive_seed(cfg.data_seed, 2)};
    write_dataset(detail::out_path(spec, "train.jsonl"), {cfg.system, cfg.eta, seeds[0], splits.train});
    write_dataset(detail::out_path(spec, "val.jsonl"), {cfg.system, cfg.eta, seeds[1], splits.val});
    write_dataset(detail::out_path(spec, "test.jsonl"), {cfg.system, cfg.eta, seeds[2], splits.test});
    write_manifest(spec, cfg, {"train.jsonl", "val.jsonl", "test.jsonl"});
    log << "wrote " << splits.train.size() << "/" << splits.val.size() << "/" << splits.test.size()
        << " samples to " << spec.out_dir << "\n";
}

inline void cmd_train(const ExperimentSpec &spec, ExperimentConfig cfg, std::ostream &log)
{
    const auto splits = obtain_splits(spec, cfg, false, log);
    const auto result = fit(splits.train, splits.val, cfg.system, cfg.training);
    write_checkpoint(detail::out_path(spec, "checkpoint.json"), make_checkpoint(cfg.system, result));
    write_file_atomic(detail::out_path(spec, "history.csv"), history_csv(result.history));
    write_file_atomic(detail::out_path(spec, "report.json"), to_json_value(result.meta).dump(2) + "\n");
    write_manifest(spec, cfg, {"checkpoint.json", "history.csv", "report.json"});
    log << "best epoch " << result.meta.epoch << ": validation WSR soft " << result.meta.best_val_wsr_soft
        << ", hard " << result.meta.best_val_wsr_hard << "\n";
}

inline void cmd_search_c(const ExperimentSpec &spec, ExperimentConfig cfg, std::ostream &log)
{
    const auto splits = obtain_splits(spec, cfg, false, log);
    const auto report = search_c(splits.train, splits.val, cfg.system, cfg.training, cfg.c_init, 32,
                                 [&](const SearchIterate &it) {
                                     log << "c = " << it.c << ": WSR_t " << it.wsr_t << ", WSR_p " << it.wsr_p
                                         << "\n";
                                 });
    std::ostringstream csv;
    csv << "iteration,c,wsr_t,wsr_p,gap\n";
    for (std::size_t i = 0; i < report.history.size(); ++i) {
        const auto &h = report.history[i];
        csv << i + 1 << ',' << detail::csv_number(h.c) << ',' << detail::csv_number(h.wsr_t) << ','
            << detail::csv_number(h.wsr_p) << ',' << detail::csv_number(h.gap) << '\n';
    }
    write_file_atomic(detail::out_path(spec, "search.csv"), csv.str());
    write_checkpoint(detail::out_path(spec, "checkpoint.json"), make_checkpoint(cfg.system, *report.best.fit));
    write_file_atomic(detail::out_path(spec, "history.csv"), history_csv(report.best.fit->history));
    const nlohmann::json j = {{"best_c", report.best.c},         {"wsr_t", report.best.wsr_t},
                              {"wsr_p", report.best.wsr_p},       {"gap", report.best.gap},
                              {"iterations", report.history.size()}, {"stop_reason", report.stop_reason}};
    write_file_atomic(detail::out_path(spec, "report.json"), j.dump(2) + "\n");
    write_manifest(spec, cfg, {"search.csv", "checkpoint.json", "history.csv", "report.json"});
    log << "best c = " << report.best.c << " (" << report.stop_reason << ")\n";
}

inline void cmd_idqnn(const ExperimentSpec &spec, ExperimentConfig cfg, std::ostream &log)
{
    const auto splits = obtain_splits(spec, cfg, false, log);
    const auto r = run_idqnn(splits.train, splits.val, cfg.system, cfg.training);
    write_checkpoint(detail::out_path(spec, "checkpoint.json"), make_checkpoint(cfg.system, r.final));
    write_checkpoint(detail::out_path(spec, "pretrain_checkpoint.json"), make_checkpoint(cfg.system, r.pretrain));
    write_file_atomic(detail::out_path(spec, "pretrain_history.csv"), history_csv(r.pretrain.history));
    write_file_atomic(detail::out_path(spec, "history.csv"), history_csv(r.final.history));
    const nlohmann::json j = {{"wsr_c", r.wsr_c},
                              {"f_cons_c", r.fcons_c},
                              {"lambda", r.lambda},
                              {"pretrain", to_json_value(r.pretrain.meta)},
                              {"final", to_json_value(r.final.meta)}};
    write_file_atomic(detail::out_path(spec, "report.json"), j.dump(2) + "\n");
    write_manifest(spec, cfg,
                   {"checkpoint.json", "pretrain_checkpoint.json", "pretrain_history.csv", "history.csv",
                    "report.json"});
    log << "lambda = " << r.lambda << "; validation WSR soft " << r.final.meta.best_val_wsr_soft << ", hard "
        << r.final.meta.best_val_wsr_hard << "\n";
}

inline void cmd_eval(const ExperimentSpec &spec, ExperimentConfig cfg, std::ostream &log)
{
    detail::require(!spec.checkpoint.empty(), "eval: a checkpoint is required");
    const auto ck = read_checkpoint(spec.checkpoint);
    cfg.system = ck.config;
    std::vector<ChannelSample> test;
    if (!spec.data_dir.empty()) {
        auto ds = read_dataset(std::filesystem::path(spec.data_dir) / "test.jsonl");
        detail::require(nlohmann::json(ds.config) == nlohmann::json(ck.config),
                        "eval: test data and checkpoint use different system configurations");
        cfg.eta = ds.eta;
        test = std::move(ds.samples);
    } else {
        test = generate_samples(cfg.system, cfg.test_count, cfg.eta, derive_seed(cfg.data_seed, 2));
    }
    const auto s = evaluate_model(ck.model, test, cfg.system, cfg.training.J, cfg.training.seed, cfg.random_trials,
                                  cfg.oracle, log);
    write_file_atomic(detail::out_path(spec, "eval.csv"), eval_csv(s));
    write_file_atomic(detail::out_path(spec, "summary.json"), summary_json(s).dump(2) + "\n");
    write_manifest(spec, cfg, {"eval.csv", "summary.json"});
    log << "mean WSR soft " << s.mean_soft << ", hard " << s.mean_hard << ", random " << s.mean_random;
    if (s.has_oracle)
        log << ", oracle " << s.mean_oracle;
    log << "\n";
}

struct SweepPoint {
    double value = 0.0;
    EvalSummary summary;
};

inline ExperimentConfig sweep_point_config(const ExperimentConfig &base, std::size_t index)
{
    ExperimentConfig c = base;
    const double v = base.sweep.values.at(index);
    switch (base.sweep.axis) {
    case SweepAxis::pt_dbm:
        c.system.set_pt_dbm(v);
        break;
    case SweepAxis::N:
        detail::require(v >= 1.0 && v == std::floor(v), "sweep: N values must be positive integers");
        c.system.N = static_cast<int>(v);
        c.system.Nx = 0;
        c.system.Ny = 0;
        break;
    case SweepAxis::eta:
        c.eta = v;
        break;
    }
    // channels are shared across points where the axis allows it; training seeds are per point
    c.training.seed = derive_seed(base.training.seed, index);
    c.validate();
    return c;
}

inline SweepPoint run_sweep_point(const ExperimentConfig &base, std::size_t index, const std::optional<Model> &fixed)
{
    const auto cfg = sweep_point_config(base, index);
    std::ostringstream quiet;
    SweepPoint p{base.sweep.values[index], {}};
    if (fixed) {
        const auto test = generate_samples(cfg.system, cfg.test_count, cfg.eta, derive_seed(cfg.data_seed, 2));
        p.summary = evaluate_model(*fixed, test, cfg.system, cfg.training.J, cfg.training.seed, cfg.random_trials,
                                   cfg.oracle, quiet);
        return p;
    }
    const auto splits = generate_splits(cfg);
    const auto fitted = fit(splits.train, splits.val, cfg.system, cfg.training);
    p.summary = evaluate_model(fitted.model, splits.test, cfg.system, cfg.training.J, cfg.training.seed,
                               cfg.random_trials, cfg.oracle, quiet);
    return p;
}

inline std::vector<SweepPoint> run_sweep(const ExperimentConfig &cfg, const std::optional<Model> &fixed,
                                         std::ostream &log)
{
    detail::require(!cfg.sweep.values.empty(), "sweep: no axis values given");
    if (fixed && cfg.sweep.axis == SweepAxis::N)
        throw validation_error("sweep: an N sweep needs training at every point");
    std::vector<SweepPoint> points(cfg.sweep.values.size());
    if (cfg.sweep.parallel) {
        std::vector<std::future<SweepPoint>> jobs;
        for (std::size_t i = 0; i < points.size(); ++i)
            jobs.push_back(std::async(std::launch::async, [&, i] { return run_sweep_point(cfg, i, fixed); }));
        for (std::size_t i = 0; i < points.size(); ++i)
            points[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) {
            points[i] = run_sweep_point(cfg, i, fixed);
            log << to_string(cfg.sweep.axis) << " = " << points[i].value << ": hard "
                << points[i].summary.mean_hard << "\n";
        }
    }
    return points;
}

// Columns: axis,value,wsr_soft,wsr_hard,wsr_random[,wsr_oracle]
inline std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint> &points)
{
    const bool oracle = std::all_of(points.begin(), points.end(), [](const auto &p) { return p.summary.has_oracle; });
    std::ostringstream os;
    os << "axis,value,wsr_soft,wsr_hard,wsr_random" << (oracle ? ",wsr_oracle" : "") << "\n";
    for (const auto &p : points) {
        os << to_string(axis) << ',' << detail::csv_number(p.value) << ',' << detail::csv_number(p.summary.mean_soft)
           << ',' << detail::csv_number(p.summary.mean_hard) << ',' << detail::csv_number(p.summary.mean_random);
        if (oracle)
            os << ',' << detail::csv_number(p.summary.mean_oracle);
        os << '\n';
    }
    return os.str();
}

inline void cmd_sweep(const ExperimentSpec &spec, const ExperimentConfig &cfg, std::ostream &log)
{
    std::optional<Model> fixed;
    ExperimentConfig base = cfg;
    if (!cfg.sweep.train) {
        detail::require(!spec.checkpoint.empty(), "sweep: sweep.train=false needs a checkpoint");
        auto ck = read_checkpoint(spec.checkpoint);
        base.system = ck.config;
        fixed = std::move(ck.model);
    }
    const auto points = run_sweep(base, fixed, log);
    write_file_atomic(detail::out_path(spec, "sweep.csv"), sweep_csv(base.sweep.axis, points));
    write_manifest(spec, base, {"sweep.csv"});
}

inline void dispatch(const ExperimentSpec &spec, const ExperimentConfig &cfg, std::ostream &log)
{
    if (spec.command == "gen-data")
        cmd_gen_data(spec, cfg, log);
    else if (spec.command == "train")
        cmd_train(spec, cfg, log);
    else if (spec.command == "search-c")
        cmd_search_c(spec, cfg, log);
    else if (spec.command == "idqnn")
        cmd_idqnn(spec, cfg, log);
    else if (spec.command == "eval")
        cmd_eval(spec, cfg, log);
    else if (spec.command == "sweep")
        cmd_sweep(spec, cfg, log);
    else
        throw validation_error("unknown command: " + spec.command);
}

inline void run_experiment(const ExperimentSpec &spec, std::ostream &log) { dispatch(spec, resolve_spec(spec), log); }

// Replays a manifest with its recorded resolved configuration; only the
// output directory changes.
inline void rerun_manifest(const std::string &manifest_path, const std::string &out_dir, std::ostream &log)
{
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception &e) {
        throw io_error(std::string("manifest: malformed file: ") + e.what());
    }
    if (m.value("format", "") != "risq-manifest")
        throw io_error("manifest: not a risq manifest");
    ExperimentSpec spec;
    spec.command = m.at("command").get<std::string>();
    spec.config_path = m.at("config_path").get<std::string>();
    spec.overrides = m.at("overrides").get<std::vector<std::string>>();
    if (!m.at("seed").is_null())
        spec.seed = m.at("seed").get<std::uint64_t>();
    spec.data_dir = m.at("data_dir").get<std::string>();
    spec.checkpoint = m.at("checkpoint").get<std::string>();
    spec.out_dir = out_dir;
    dispatch(spec, experiment_config_from_json(m.at("resolved")), log);
}

// Maps the library's error families to exit codes, reporting with the command name.
template <typename F>
int run_guarded(const std::string &command, F &&f, std::ostream &err)
{
    try {
        f();
        return exit_ok;
    } catch (const budget_error &e) {
        err << command << ": enumeration refused: " << e.what() << "\n";
        return exit_budget;
    } catch (const io_error &e) {
        err << command << ": I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const validation_error &e) {
        err << command << ": invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const domain_error &e) {
        err << command << ": invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception &e) {
        err << command << ": " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace risq
