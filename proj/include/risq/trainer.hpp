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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"
#include "linkmath.hpp"
#include "network.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "system_config.hpp"

namespace risq {

enum class LossKind { perfect, penalized, averaged, averaged_penalized };

inline bool is_penalized(LossKind k) { return k == LossKind::penalized || k == LossKind::averaged_penalized; }
inline bool is_averaged(LossKind k) { return k == LossKind::averaged || k == LossKind::averaged_penalized; }

inline std::string to_string(LossKind k)
{
    switch (k) {
    case LossKind::perfect:
        return "perfect";
    case LossKind::penalized:
        return "penalized";
    case LossKind::averaged:
        return "averaged";
    case LossKind::averaged_penalized:
        return "averaged_penalized";
    }
    return "perfect";
}

inline LossKind parse_loss_kind(const std::string &s)
{
    if (s == "perfect")
        return LossKind::perfect;
    if (s == "penalized")
        return LossKind::penalized;
    if (s == "averaged")
        return LossKind::averaged;
    if (s == "averaged_penalized" || s == "averaged+penalized")
        return LossKind::averaged_penalized;
    throw validation_error("unknown loss kind: " + s);
}

// Optimisation schedule. Defaults are the desk-scale settings; full_scale()
// gives the original large-run settings.
struct TrainConfig {
    int batch_size = 256;
    int max_epochs = 300;
    int patience = 25;
    double lr = 1e-3;
    double plateau_factor = 0.8;
    int plateau_patience = 10;
    double lr_floor = 5e-5;
    double tau = 0.005;
    int J = 10;
    LossKind loss = LossKind::perfect;
    double lambda = 0.0;
    double c = 1.0;
    std::uint64_t seed = 1;

    static TrainConfig full_scale()
    {
        TrainConfig t;
        t.batch_size = 1024;
        t.max_epochs = 1500;
        t.patience = 50;
        t.plateau_patience = 20;
        return t;
    }

    void validate() const
    {
        detail::require(batch_size >= 2, "batch size must be >= 2");
        detail::require(max_epochs >= 1, "max_epochs must be >= 1");
        detail::require(patience >= 1 && plateau_patience >= 1, "patience values must be >= 1");
        detail::require(lr > 0.0 && lr_floor > 0.0 && lr_floor <= lr, "need 0 < lr_floor <= lr");
        detail::require(plateau_factor > 0.0 && plateau_factor < 1.0, "plateau factor must be in (0, 1)");
        detail::require(tau > 0.0, "tau must be positive");
        detail::require(J >= 1, "J must be >= 1");
        detail::require(lambda >= 0.0, "lambda must be non-negative");
        if (!(c > 0.0))
            throw domain_error("quantizer steepness c must be positive");
    }
};

// ---------------------------------------------------------------------------
// Losses on already-evaluated solutions.

inline double sample_wsr(const RateReport &r, std::span<const double> q) { return wsr(r.gamma, q); }

// Negative batch WSR.
inline double loss_perfect(std::span<const BeamformingSolution> batch, std::span<const double> q)
{
    double total = 0.0;
    for (const auto &s : batch)
        total -= sample_wsr(s.rates, q);
    return total;
}

// Boundary penalty of one sample: summed over its N continuous phases.
inline double sample_penalty(const Eigen::VectorXd &phi_cont, const QuantizerParams &quantizer)
{
    double f = 0.0;
    for (Eigen::Index n = 0; n < phi_cont.size(); ++n)
        f += penalty(phi_cont(n), quantizer);
    return f;
}

inline double loss_penalized(std::span<const BeamformingSolution> batch, std::span<const double> q, double lambda,
                             const QuantizerParams &quantizer)
{
    if (!(lambda >= 0.0))
        throw domain_error("loss_penalized: lambda must be non-negative");
    double total = loss_perfect(batch, q);
    for (const auto &s : batch)
        total += lambda * sample_penalty(s.phi_cont, quantizer);
    return total;
}

// Sum over J true-channel draws of the inner loss, with the solution of each
// sample fixed (computed from its estimate) and re-scored on every draw.
// draws[l] holds the draws of sample l.
inline double loss_averaged(std::span<const BeamformingSolution> batch, std::span<const std::vector<Channels>> draws,
                            const SystemConfig &cfg, LossKind inner, double lambda, const QuantizerParams &quantizer)
{
    detail::require(batch.size() == draws.size(), "loss_averaged: one draw set per sample required");
    const auto q = cfg.weights();
    double total = 0.0;
    for (std::size_t l = 0; l < batch.size(); ++l) {
        const double pen = is_penalized(inner) ? lambda * sample_penalty(batch[l].phi_cont, quantizer) : 0.0;
        for (const auto &d : draws[l]) {
            const auto r = rate_report(d, batch[l].reflection.theta, batch[l].w, cfg.sigma2, q);
            total += -r.wsr + pen;
        }
    }
    return total;
}

// Penalty weight from a pre-trained reference point: 0.1 * WSR_c / f_cons,c.
inline double compute_lambda(double wsr_c, double f_cons_c)
{
    if (!(f_cons_c > 0.0))
        throw domain_error("compute_lambda: f_cons must be positive");
    return 0.1 * wsr_c / f_cons_c;
}

// ---------------------------------------------------------------------------
// Differentiable objective over raw network outputs.

struct ObjectiveResult {
    double loss = 0.0;      // summed over samples and draws
    double wsr_sum = 0.0;   // soft-mode WSR summed over samples and draws
    double fcons_sum = 0.0; // per-sample penalty summed over samples
    long long terms = 0;    // number of (sample, draw) pairs
    HeadGrads grads;
};

inline ObjectiveResult evaluate_objective(const NetworkParams &p, const Eigen::MatrixXd &output,
                                          std::span<const std::vector<Channels>> draws, const SystemConfig &cfg,
                                          bool penalized, double lambda, bool want_grad)
{
    detail::require(static_cast<std::size_t>(output.rows()) == draws.size(), "objective: one draw set per row");
    const auto q = cfg.weights();
    const auto &quant = p.quantizer;
    ObjectiveResult r;
    if (want_grad) {
        r.grads.d_output = Eigen::MatrixXd::Zero(output.rows(), output.cols());
        r.grads.d_rho.assign(quant.rho.size(), 0.0);
    }
    for (Eigen::Index l = 0; l < output.rows(); ++l) {
        const auto head = apply_head(output.row(l), p.shape, quant, cfg.pt, QuantizeMode::soft);
        const auto &set = draws[static_cast<std::size_t>(l)];
        detail::require(!set.empty(), "objective: empty draw set");
        const double fcons = sample_penalty(head.phi_cont, quant);
        r.fcons_sum += fcons;
        const double J = static_cast<double>(set.size());

        Eigen::VectorXcd d_theta = Eigen::VectorXcd::Zero(p.shape.n);
        Eigen::MatrixXcd d_w = Eigen::MatrixXcd::Zero(p.shape.m, p.shape.k);
        for (const auto &ch : set) {
            const auto wg = wsr_with_gradient(ch, head.reflection.theta, head.w, cfg.sigma2, q);
            r.loss -= wg.wsr;
            r.wsr_sum += wg.wsr;
            ++r.terms;
            if (want_grad) {
                d_theta -= wg.d_theta;
                d_w -= wg.d_w;
            }
        }
        if (penalized)
            r.loss += J * lambda * fcons;
        if (!want_grad)
            continue;

        Eigen::VectorXd d_phi_direct = Eigen::VectorXd::Zero(p.shape.n);
        if (penalized && lambda > 0.0) {
            for (int n = 0; n < p.shape.n; ++n) {
                const auto pg = penalty_grad(head.phi_cont(n), quant);
                d_phi_direct(n) = J * lambda * pg.d_dx;
                for (std::size_t i = 0; i < pg.d_drho.size(); ++i)
                    r.grads.d_rho[i] += J * lambda * pg.d_drho[i];
            }
        }
        head_backward(head, quant, cfg.pt, d_theta, d_w, d_phi_direct, r.grads.d_output.row(l), r.grads.d_rho);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Adam over every trainable tensor, rho included, with one global rate.

template <typename F>
void visit_tensors(NetworkParams &p, const NetworkGrads &g, F &&f)
{
    for (int l = 0; l < dense_layer_count; ++l) {
        f(Eigen::Map<Eigen::VectorXd>(p.dense[l].weight.data(), p.dense[l].weight.size()),
          Eigen::Map<const Eigen::VectorXd>(g.weight[l].data(), g.weight[l].size()));
        f(Eigen::Map<Eigen::VectorXd>(p.dense[l].bias.data(), p.dense[l].bias.size()),
          Eigen::Map<const Eigen::VectorXd>(g.bias[l].data(), g.bias[l].size()));
    }
    for (int l = 0; l < norm_layer_count; ++l) {
        f(Eigen::Map<Eigen::VectorXd>(p.norm[l].scale.data(), p.norm[l].scale.size()),
          Eigen::Map<const Eigen::VectorXd>(g.scale[l].data(), g.scale[l].size()));
        f(Eigen::Map<Eigen::VectorXd>(p.norm[l].shift.data(), p.norm[l].shift.size()),
          Eigen::Map<const Eigen::VectorXd>(g.shift[l].data(), g.shift[l].size()));
    }
    f(Eigen::Map<Eigen::VectorXd>(p.quantizer.rho.data(), static_cast<Eigen::Index>(p.quantizer.rho.size())),
      Eigen::Map<const Eigen::VectorXd>(g.rho.data(), static_cast<Eigen::Index>(g.rho.size())));
}

class Adam {
  public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void step(NetworkParams &p, const NetworkGrads &g, double lr)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        std::size_t i = 0;
        visit_tensors(p, g, [&](Eigen::Map<Eigen::VectorXd> w, Eigen::Map<const Eigen::VectorXd> dw) {
            if (i == m_.size()) {
                m_.push_back(Eigen::VectorXd::Zero(w.size()));
                v_.push_back(Eigen::VectorXd::Zero(w.size()));
            }
            auto &m = m_[i];
            auto &v = v_[i];
            m = beta1 * m + (1.0 - beta1) * dw;
            v = beta2 * v + (1.0 - beta2) * dw.cwiseAbs2();
            w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
            ++i;
        });
        ++p.version;
    }

  private:
    long long t_ = 0;
    std::vector<Eigen::VectorXd> m_, v_;
};

// ---------------------------------------------------------------------------
// Validation scoring.

struct ValidationScore {
    double loss = 0.0;     // per (sample, draw)
    double wsr_soft = 0.0; // mean over samples and draws
    double wsr_hard = 0.0;
    double mean_fcons = 0.0; // mean over samples of the per-sample penalty
    double gap = 0.0;
};

// Scoring channels: the estimate itself under perfect CSI, else J fixed draws.
inline std::vector<std::vector<Channels>> scoring_draws(std::span<const ChannelSample> samples, int J,
                                                        std::uint64_t seed)
{
    std::vector<std::vector<Channels>> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].perfect_csi()) {
            out.push_back({samples[i].estimate});
            continue;
        }
        Rng rng = make_rng(derive_seed(seed, i));
        out.push_back(draw_true_channels(samples[i], J, rng));
    }
    return out;
}

inline ValidationScore score_model(const Model &model, std::span<const ChannelSample> samples,
                                   std::span<const std::vector<Channels>> draws, const SystemConfig &cfg,
                                   LossKind kind, double lambda)
{
    detail::require(!samples.empty(), "score_model: no samples");
    const auto &p = model.params;
    const auto out = forward(p, model.standardizer.apply(stack_inputs(samples)), Mode::inference);
    const auto obj = evaluate_objective(p, out.output, draws, cfg, is_penalized(kind), lambda, false);
    const auto q = cfg.weights();
    double hard = 0.0;
    for (Eigen::Index l = 0; l < out.output.rows(); ++l) {
        const auto head = apply_head(out.output.row(l), p.shape, p.quantizer, cfg.pt, QuantizeMode::hard);
        for (const auto &ch : draws[static_cast<std::size_t>(l)])
            hard += rate_report(ch, head.reflection.theta, head.w, cfg.sigma2, q).wsr;
    }
    ValidationScore s;
    const double terms = static_cast<double>(obj.terms);
    s.loss = obj.loss / terms;
    s.wsr_soft = obj.wsr_sum / terms;
    s.wsr_hard = hard / terms;
    s.mean_fcons = obj.fcons_sum / static_cast<double>(samples.size());
    s.gap = s.wsr_soft > 0.0 ? gap(s.wsr_soft, s.wsr_hard) : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Training loop.

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0; // per (sample, draw)
    double val_loss = 0.0;
    double val_wsr_soft = 0.0;
    double val_wsr_hard = 0.0;
    double mean_fcons = 0.0;
    double gap = 0.0;
};

struct TrainMetadata {
    std::uint64_t seed = 0;
    int epoch = 0; // epoch of the retained parameters
    double best_val_loss = 0.0;
    double best_val_wsr_soft = 0.0;
    double best_val_wsr_hard = 0.0;
    double best_val_fcons = 0.0;
    LossKind loss = LossKind::perfect;
    double lambda = 0.0;
    double c = 1.0;
};

struct FitResult {
    Model model;
    TrainMetadata meta;
    std::vector<EpochRecord> history;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> idx, int batch_size)
{
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < idx.size(); i += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(idx.size(), i + static_cast<std::size_t>(batch_size));
        batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i), idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    // a trailing batch of one has no batch statistics
    if (batches.size() > 1 && batches.back().size() < 2) {
        auto last = batches.back();
        batches.pop_back();
        batches.back().insert(batches.back().end(), last.begin(), last.end());
    }
    return batches;
}

} // namespace detail

// Trains from `start` (or a fresh initialisation seeded by cfg.seed) and
// returns the parameters with the lowest validation loss. A warm start keeps
// its standardizer and learned boundaries but takes c from cfg.
inline FitResult fit_from(const std::optional<Model> &start, std::span<const ChannelSample> train,
                          std::span<const ChannelSample> val, const SystemConfig &sys, const TrainConfig &cfg,
                          const std::function<void(const EpochRecord &)> &on_epoch = {})
{
    sys.validate();
    cfg.validate();
    if (train.size() < 2)
        throw validation_error("fit: training split needs at least 2 samples");
    if (val.empty())
        throw validation_error("fit: validation split is empty");
    for (const auto &s : train)
        check_dimensions(s.estimate, sys);
    for (const auto &s : val)
        check_dimensions(s.estimate, sys);

    const NetworkShape shape = NetworkShape::of(sys);
    Rng init_rng = make_rng(derive_seed(cfg.seed, 0));
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 1));
    Rng draw_rng = make_rng(derive_seed(cfg.seed, 2));

    const Eigen::MatrixXd raw_train = stack_inputs(train);
    Model model;
    if (start) {
        detail::require(start->params.shape.n == shape.n && start->params.shape.m == shape.m &&
                            start->params.shape.k == shape.k && start->params.quantizer.bits == sys.bits,
                        "fit: warm start does not match the system configuration");
        model = *start;
        model.params.quantizer.c = cfg.c;
    } else {
        model = Model{init_params(shape, sys.bits, cfg.c, init_rng), Standardizer::fit(raw_train)};
    }
    const Eigen::MatrixXd x_train = model.standardizer.apply(raw_train);
    const auto val_draws = scoring_draws(val, cfg.J, derive_seed(cfg.seed, 3));
    const bool averaged = is_averaged(cfg.loss);
    const bool penalized = is_penalized(cfg.loss);

    FitResult result;
    result.meta.seed = cfg.seed;
    result.meta.loss = cfg.loss;
    result.meta.lambda = cfg.lambda;
    result.meta.c = cfg.c;
    result.meta.best_val_loss = std::numeric_limits<double>::infinity();

    Adam adam;
    double lr = cfg.lr;
    int since_best = 0, since_plateau = 0;
    double plateau_best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double train_loss = 0.0;
        long long train_terms = 0;
        for (const auto &batch : detail::make_batches(order, cfg.batch_size)) {
            Eigen::MatrixXd xb(static_cast<Eigen::Index>(batch.size()), x_train.cols());
            std::vector<std::vector<Channels>> draws;
            draws.reserve(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                xb.row(static_cast<Eigen::Index>(i)) = x_train.row(static_cast<Eigen::Index>(batch[i]));
                const auto &s = train[batch[i]];
                if (averaged)
                    draws.push_back(draw_true_channels(s, cfg.J, draw_rng));
                else
                    draws.push_back({s.estimate});
            }
            auto out = forward(model.params, xb, Mode::training);
            auto obj = evaluate_objective(model.params, out.output, draws, sys, penalized, cfg.lambda, true);
            const auto grads = backward(model.params, out.trace, obj.grads);
            update_running_stats(model.params, out.trace);
            adam.step(model.params, grads, lr);
            train_loss += obj.loss;
            train_terms += obj.terms;
        }

        const auto score = score_model(model, val, val_draws, sys, cfg.loss, cfg.lambda);
        EpochRecord rec{epoch,           lr,          train_loss / static_cast<double>(train_terms),
                        score.loss,      score.wsr_soft, score.wsr_hard,
                        score.mean_fcons, score.gap};
        result.history.push_back(rec);
        if (on_epoch)
            on_epoch(rec);

        if (score.loss < result.meta.best_val_loss) {
            result.meta.best_val_loss = score.loss;
            result.meta.best_val_wsr_soft = score.wsr_soft;
            result.meta.best_val_wsr_hard = score.wsr_hard;
            result.meta.best_val_fcons = score.mean_fcons;
            result.meta.epoch = epoch;
            result.model = model;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (score.loss < plateau_best) {
            plateau_best = score.loss;
            since_plateau = 0;
        } else if (++since_plateau >= cfg.plateau_patience) {
            lr = std::max(lr * cfg.plateau_factor, cfg.lr_floor);
            since_plateau = 0;
        }
        if (since_best >= cfg.patience)
            break;
    }
    return result;
}

inline FitResult fit(std::span<const ChannelSample> train, std::span<const ChannelSample> val,
                     const SystemConfig &sys, const TrainConfig &cfg,
                     const std::function<void(const EpochRecord &)> &on_epoch = {})
{
    return fit_from(std::nullopt, train, val, sys, cfg, on_epoch);
}

// ---------------------------------------------------------------------------
// Comparative search over the quantizer steepness.

struct SearchIterate {
    double c = 0.0;
    double wsr_t = 0.0; // validation WSR with the soft quantizer
    double wsr_p = 0.0; // validation WSR with the staircase quantizer
    double gap = 0.0;
    std::optional<FitResult> fit;
};

struct SearchReport {
    SearchIterate best;
    std::vector<SearchIterate> history; // fit results stripped
    std::string stop_reason;
};

// Steps c by -1 while the gap is below tau and by +1 otherwise, for as long as
// the staircase WSR keeps improving; returns the last improving iterate. c is
// floored at 1, a step below the floor ends the search, and so does revisiting
// an already evaluated c or exhausting max_iterations.
inline SearchReport search_c_with(const std::function<SearchIterate(double)> &evaluate, double c_init, double tau,
                                  int max_iterations = 32)
{
    if (!(c_init > 0.0))
        throw domain_error("search_c: c_init must be positive");
    detail::require(max_iterations >= 1, "search_c: max_iterations must be >= 1");
    SearchReport report;
    std::optional<SearchIterate> prev;
    std::vector<double> visited;
    double c = std::max(1.0, c_init);
    for (int i = 1;; ++i) {
        SearchIterate cur = evaluate(c);
        cur.c = c;
        cur.gap = cur.wsr_t > 0.0 ? gap(cur.wsr_t, cur.wsr_p) : 0.0;
        visited.push_back(c);
        SearchIterate stripped = cur;
        stripped.fit.reset();
        report.history.push_back(stripped);

        const double prev_p = prev ? prev->wsr_p : 0.0;
        if (cur.wsr_p < prev_p) {
            report.best = std::move(*prev);
            report.stop_reason = "staircase WSR decreased";
            return report;
        }
        const double next = cur.gap < tau ? c - 1.0 : c + 1.0;
        if (next < 1.0) {
            report.best = std::move(cur);
            report.stop_reason = "c reached floor";
            return report;
        }
        if (std::find(visited.begin(), visited.end(), next) != visited.end()) {
            report.best = std::move(cur);
            report.stop_reason = "c revisited";
            return report;
        }
        if (i >= max_iterations) {
            report.best = std::move(cur);
            report.stop_reason = "iteration limit";
            return report;
        }
        prev = std::move(cur);
        c = next;
    }
}

inline SearchReport search_c(std::span<const ChannelSample> train, std::span<const ChannelSample> val,
                             const SystemConfig &sys, const TrainConfig &cfg, double c_init, int max_iterations = 32,
                             const std::function<void(const SearchIterate &)> &on_iterate = {})
{
    return search_c_with(
        [&](double c) {
            TrainConfig tc = cfg;
            tc.c = c;
            SearchIterate it;
            it.fit = fit(train, val, sys, tc);
            it.c = c;
            it.wsr_t = it.fit->meta.best_val_wsr_soft;
            it.wsr_p = it.fit->meta.best_val_wsr_hard;
            if (on_iterate)
                on_iterate(it);
            return it;
        },
        c_init, cfg.tau, max_iterations);
}

// ---------------------------------------------------------------------------
// Penalised training with the heuristic penalty weight.

struct IdqnnResult {
    FitResult pretrain; // c = 1, unpenalised loss
    FitResult final;    // c = 1, penalised loss with the derived lambda
    double wsr_c = 0.0;
    double fcons_c = 0.0;
    double lambda = 0.0;
};

inline IdqnnResult run_idqnn(std::span<const ChannelSample> train, std::span<const ChannelSample> val,
                             const SystemConfig &sys, const TrainConfig &cfg)
{
    const bool imperfect = is_averaged(cfg.loss) ||
                           std::any_of(train.begin(), train.end(), [](const auto &s) { return !s.perfect_csi(); });
    TrainConfig pre = cfg;
    pre.c = 1.0;
    pre.lambda = 0.0;
    pre.loss = imperfect ? LossKind::averaged : LossKind::perfect;

    IdqnnResult r;
    r.pretrain = fit(train, val, sys, pre);
    r.wsr_c = r.pretrain.meta.best_val_wsr_soft;
    // reference penalty per phase element, the scale of the tabulated values
    r.fcons_c = r.pretrain.meta.best_val_fcons / static_cast<double>(sys.N);
    r.lambda = compute_lambda(r.wsr_c, r.fcons_c);

    TrainConfig fin = pre;
    fin.loss = imperfect ? LossKind::averaged_penalized : LossKind::penalized;
    fin.lambda = r.lambda;
    r.final = fit_from(r.pretrain.model, train, val, sys, fin);
    return r;
}

} // namespace risq
