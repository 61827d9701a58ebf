#pragma once

// Informative-source detection: a J-fold cross-validated benchmark on the
// target, per-source test losses on the target data, a threshold rule, and a
// final transfer fit on the retained sources.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/estimators.hpp"
#include "transmc/random.hpp"

namespace transmc {

enum class SourceLossMode {
    full_target,   // L_k = (1/n0) sum over all target entries
    fold_average,  // L_k = (1/J) sum_j L^[j](A_k)
};

enum class SpreadMode {
    sample,      // sqrt(sum (L^[j] - L0)^2 / (J - 1))
    population,  // sqrt(sum (L^[j] - L0)^2 / J)
};

struct SelectionConfig {
    int folds = 4;
    /// NaN means 0.05 * v_hat^2, v_hat from a pilot fit on the target.
    double epsilon0 = std::numeric_limits<double>::quiet_NaN();
    double c_tilde = 2.0;

    /// Penalties for the target-fold fits (lambda0) and source fits (lambda_k).
    PenaltyMode penalty_mode = PenaltyMode::theorem_formula;
    double c0 = 2.0;
    double ck = 2.0;
    double lambda0 = 0.0;
    std::vector<double> lambda_k;  // explicit mode; one per source, or one shared value
    double a = std::numeric_limits<double>::quiet_NaN();  // entry bound in the formula; NaN = box level
    double v = std::numeric_limits<double>::quiet_NaN();  // noise scale; NaN = pilot estimate

    std::uint64_t seed = 1;
    SourceLossMode source_loss = SourceLossMode::full_target;
    SpreadMode spread = SpreadMode::sample;

    void validate() const {
        if (folds < 2) throw InvalidInput("SelectionConfig: need at least 2 folds");
        if (!std::isnan(epsilon0) && !(epsilon0 > 0.0)) throw InvalidInput("SelectionConfig: epsilon0 must be positive");
        if (!(c_tilde > 0.0)) throw InvalidInput("SelectionConfig: c_tilde must be positive");
        if (penalty_mode == PenaltyMode::theorem_formula && (!(c0 > 0.0) || !(ck > 0.0)))
            throw InvalidInput("SelectionConfig: penalty multipliers must be positive");
    }
};

struct SelectionReport {
    std::vector<double> fold_losses;
    double L0 = 0.0;
    std::vector<double> source_losses;
    double sigma_hat = 0.0;
    double epsilon0 = 0.0;
    double c_tilde = 0.0;
    double threshold = 0.0;
    std::vector<int> selected;  // 1-based source indices, ascending
    double lambda0 = 0.0;
    std::vector<double> lambda_k;
};

/// Uniformly random partition into J folds whose sizes differ by at most one.
inline std::vector<MaskedDataset> split_folds(const MaskedDataset& target, int folds, std::uint64_t seed) {
    if (folds < 1) throw InvalidInput("split_folds: fold count must be positive");
    if (target.size() < static_cast<std::size_t>(folds))
        throw InvalidInput("split_folds: fewer observations than folds");
    std::vector<std::size_t> order(target.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, {0x466f6c64});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<MaskedDataset> out(static_cast<std::size_t>(folds),
                                   MaskedDataset{target.rows, target.cols, {}, target.task_id});
    const std::size_t base = target.size() / static_cast<std::size_t>(folds);
    const std::size_t extra = target.size() % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < out.size(); ++j) {
        const std::size_t len = base + (j < extra ? 1 : 0);
        out[j].obs.reserve(len);
        for (std::size_t i = 0; i < len; ++i) out[j].obs.push_back(target.obs[order[pos++]]);
    }
    return out;
}

/// All folds except `skip`, in fold order.
inline MaskedDataset complement(const std::vector<MaskedDataset>& folds, std::size_t skip) {
    std::vector<const MaskedDataset*> parts;
    for (std::size_t j = 0; j < folds.size(); ++j)
        if (j != skip) parts.push_back(&folds[j]);
    return concatenate(parts, folds.at(skip).task_id);
}

/// Mean squared prediction error of A on the fold.
inline double fold_loss(const MaskedDataset& fold, const Matrix& a) {
    if (fold.obs.empty()) throw InvalidInput("fold_loss: empty fold");
    return mean_squared_error(fold, a);
}

inline double spread(const std::vector<double>& losses, double mean, SpreadMode mode) {
    double ss = 0.0;
    for (double x : losses) ss += (x - mean) * (x - mean);
    const double denom = mode == SpreadMode::sample ? static_cast<double>(losses.size()) - 1.0
                                                    : static_cast<double>(losses.size());
    return denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
}

struct BenchmarkLoss {
    std::vector<double> fold_losses;
    double L0 = 0.0;
    double sigma_hat = 0.0;
};

/// Resolved penalties and noise scale for one selection run.
struct SelectionPenalties {
    double lambda0 = 0.0;
    std::vector<double> lambda_k;
    double noise_scale = std::numeric_limits<double>::quiet_NaN();
};

inline SelectionPenalties resolve_selection_penalties(const MaskedDataset& target,
                                                      const std::vector<const MaskedDataset*>& sources,
                                                      const SelectionConfig& cfg, double a,
                                                      const SolverConfig& solver) {
    SelectionPenalties p;
    const bool need_v = std::isnan(cfg.v) &&
                        (cfg.penalty_mode == PenaltyMode::theorem_formula || std::isnan(cfg.epsilon0));
    p.noise_scale = need_v ? pilot_noise_scale(target, a, solver) : cfg.v;
    if (cfg.penalty_mode == PenaltyMode::explicit_values) {
        p.lambda0 = cfg.lambda0;
        if (cfg.lambda_k.size() == 1)
            p.lambda_k.assign(sources.size(), cfg.lambda_k.front());
        else if (cfg.lambda_k.size() == sources.size())
            p.lambda_k = cfg.lambda_k;
        else if (!sources.empty())
            throw InvalidInput("SelectionConfig: need one lambda_k per source");
        return p;
    }
    const double bound = std::isnan(cfg.a) ? a : cfg.a;
    const double j = static_cast<double>(cfg.folds);
    p.lambda0 = theorem_penalty(cfg.c0, bound, p.noise_scale, (j - 1.0) / j * static_cast<double>(target.size()),
                                target.rows, target.cols);
    for (const auto* s : sources)
        p.lambda_k.push_back(
            theorem_penalty(cfg.ck, bound, p.noise_scale, static_cast<double>(s->size()), s->rows, s->cols));
    return p;
}

/// Cross-validated target-only benchmark: fit on J-1 folds with lambda0,
/// score on the held-out fold.
inline BenchmarkLoss benchmark_loss(const std::vector<MaskedDataset>& folds, double lambda0, double a,
                                    const SolverConfig& solver, SpreadMode mode = SpreadMode::sample) {
    if (folds.size() < 2) throw InvalidInput("benchmark_loss: need at least 2 folds");
    BenchmarkLoss b;
    for (std::size_t j = 0; j < folds.size(); ++j) {
        const MaskedDataset train = complement(folds, j);
        const Estimate fit = fit_single(train, lambda0, a, solver);
        b.fold_losses.push_back(fold_loss(folds[j], fit.matrix));
    }
    b.L0 = std::accumulate(b.fold_losses.begin(), b.fold_losses.end(), 0.0) / static_cast<double>(folds.size());
    b.sigma_hat = spread(b.fold_losses, b.L0, mode);
    return b;
}

/// Each source fitted alone, then scored on the target data.
inline std::vector<double> source_losses(const MaskedDataset& target, const std::vector<MaskedDataset>& folds,
                                         const std::vector<const MaskedDataset*>& sources,
                                         const std::vector<double>& lambda_k, double a, const SolverConfig& solver,
                                         SourceLossMode mode = SourceLossMode::full_target) {
    if (lambda_k.size() != sources.size()) throw InvalidInput("source_losses: one penalty per source required");
    std::vector<double> out;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        if (sources[k]->rows != target.rows || sources[k]->cols != target.cols)
            throw InvalidInput("source_losses: dimension mismatch across tasks");
        const Estimate fit = fit_single(*sources[k], lambda_k[k], a, solver);
        if (mode == SourceLossMode::full_target) {
            out.push_back(mean_squared_error(target, fit.matrix));
        } else {
            double acc = 0.0;
            for (const auto& f : folds) acc += fold_loss(f, fit.matrix);
            out.push_back(acc / static_cast<double>(folds.size()));
        }
    }
    return out;
}

/// S_hat = { k : L_k - L0 <= c_tilde * max(sigma_hat, epsilon0) }.
inline SelectionReport select_sources(const BenchmarkLoss& bench, const std::vector<double>& losses,
                                      double epsilon0, double c_tilde) {
    if (!(epsilon0 > 0.0) || !(c_tilde > 0.0)) throw InvalidInput("select_sources: constants must be positive");
    SelectionReport r;
    r.fold_losses = bench.fold_losses;
    r.L0 = bench.L0;
    r.sigma_hat = bench.sigma_hat;
    r.source_losses = losses;
    r.epsilon0 = epsilon0;
    r.c_tilde = c_tilde;
    r.threshold = c_tilde * std::max(bench.sigma_hat, epsilon0);
    for (std::size_t k = 0; k < losses.size(); ++k)
        if (losses[k] - r.L0 <= r.threshold) r.selected.push_back(static_cast<int>(k + 1));
    return r;
}

inline double resolve_epsilon0(const SelectionConfig& cfg, double noise_scale) {
    if (!std::isnan(cfg.epsilon0)) return cfg.epsilon0;
    const double eps = 0.05 * noise_scale * noise_scale;
    return eps > 0.0 ? eps : 1e-12;
}

/// Selection only (no final fit).
inline SelectionReport detect_sources(const MaskedDataset& target, const std::vector<const MaskedDataset*>& sources,
                                      const SelectionConfig& cfg, double a, const SolverConfig& solver) {
    cfg.validate();
    validate(target, "detect_sources");
    const SelectionPenalties pen = resolve_selection_penalties(target, sources, cfg, a, solver);
    const auto folds = split_folds(target, cfg.folds, cfg.seed);
    const BenchmarkLoss bench = benchmark_loss(folds, pen.lambda0, a, solver, cfg.spread);
    const auto losses = source_losses(target, folds, sources, pen.lambda_k, a, solver, cfg.source_loss);
    SelectionReport r = select_sources(bench, losses, resolve_epsilon0(cfg, pen.noise_scale), cfg.c_tilde);
    r.lambda0 = pen.lambda0;
    r.lambda_k = pen.lambda_k;
    return r;
}

struct SelectiveTransferResult {
    SelectionReport report;
    TransferEstimate estimate;
};

/// Detect informative sources, then run the transfer estimator on the target
/// plus the selected sources. An empty selection falls back to the target alone.
inline SelectiveTransferResult s_trans_mc(const MaskedDataset& target, const std::vector<const MaskedDataset*>& sources,
                                          const SelectionConfig& cfg, const PenaltyPolicy& transfer, double a,
                                          const SolverConfig& solver) {
    SelectiveTransferResult out;
    out.report = detect_sources(target, sources, cfg, a, solver);
    std::vector<const MaskedDataset*> chosen;
    for (int k : out.report.selected) chosen.push_back(sources[static_cast<std::size_t>(k - 1)]);
    out.estimate = trans_mc(target, chosen, transfer, a, solver);
    return out;
}

inline SelectiveTransferResult s_trans_mc(const MaskedDataset& target, const std::vector<MaskedDataset>& sources,
                                          const SelectionConfig& cfg, const PenaltyPolicy& transfer, double a,
                                          const SolverConfig& solver) {
    std::vector<const MaskedDataset*> ptrs;
    for (const auto& s : sources) ptrs.push_back(&s);
    return s_trans_mc(target, ptrs, cfg, transfer, a, solver);
}

}  // namespace transmc
