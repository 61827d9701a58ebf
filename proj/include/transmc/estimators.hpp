#pragma once

// Single-task nuclear-norm completion and the two-step transfer estimator
// (pool all tasks, then debias on the target alone).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/lamm.hpp"
#include "transmc/linalg.hpp"

namespace transmc {

enum class Stage { single, pooled, debiased, combined };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::single: return "single";
        case Stage::pooled: return "pooled";
        case Stage::debiased: return "debiased";
        case Stage::combined: return "combined";
    }
    return "?";
}

struct Estimate {
    Matrix matrix;
    double penalty_used = 0.0;
    SolveTrace trace;
    Stage stage = Stage::single;
};

enum class PenaltyMode { explicit_values, theorem_formula };

/// How the pooling and debiasing penalties are chosen.
///
/// In theorem_formula mode
///     lambda1 = c1 * sqrt(max(a^2, v^2) / (N m)),
///     lambda2 = c2 * sqrt(max(a^2, v^2) / (n0 m)),
/// with m = min(m1, m2), N the pooled sample size and n0 the target size.
/// A NaN `v` is replaced by a pilot residual estimate; a NaN `a` by the box level.
struct PenaltyPolicy {
    PenaltyMode mode = PenaltyMode::theorem_formula;
    double c1 = 2.0;
    double c2 = 2.0;
    double a = std::numeric_limits<double>::quiet_NaN();
    double v = std::numeric_limits<double>::quiet_NaN();
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    static PenaltyPolicy explicit_penalties(double l1, double l2) {
        PenaltyPolicy p;
        p.mode = PenaltyMode::explicit_values;
        p.lambda1 = l1;
        p.lambda2 = l2;
        return p;
    }

    void validate() const {
        if (mode == PenaltyMode::theorem_formula) {
            if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidInput("PenaltyPolicy: multipliers must be positive");
        } else if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
            throw InvalidInput("PenaltyPolicy: penalties must be nonnegative");
        }
    }
};

/// Theorem-style penalty c * sqrt(max(a^2, v^2) / (n m)).
inline double theorem_penalty(double c, double a, double v, double n, std::int64_t rows, std::int64_t cols) {
    const double m = static_cast<double>(std::min(rows, cols));
    return c * std::sqrt(std::max(a * a, v * v) / (n * m));
}

/// (1/n) sum (Y - <X, A + offset>)^2 + lambda * ||A||_*
inline double penalized_objective(const MaskedDataset& data, const Matrix& a, double lambda,
                                  const std::optional<Matrix>& offset = std::nullopt) {
    const SquaredLoss loss(data, offset);
    return loss.value(a) + lambda * nuclear_norm(a);
}

/// argmin_{||A||_inf <= a} (1/n) sum (Y_i - A[r_i, c_i])^2 + lambda ||A||_*, from A = 0.
inline Estimate fit_single(const MaskedDataset& data, double lambda, double a, const SolverConfig& cfg) {
    if (!(a > 0.0)) throw InvalidInput("fit_single: box level must be positive");
    const SquaredLoss loss(data);
    SolverConfig run = resolve_scaling(cfg, loss, data.rows, data.cols);
    run.lambda = lambda;
    run.box_level = a;
    run.box_shift.reset();
    auto res = lamm_solve(loss, Matrix::Zero(data.rows, data.cols), run);
    return {std::move(res.solution), lambda, std::move(res.trace), Stage::single};
}

/// Pools tasks in ascending task_id order so that the result does not depend on
/// how the caller ordered them.
inline MaskedDataset pool_tasks(std::vector<const MaskedDataset*> tasks) {
    if (tasks.empty()) throw InvalidInput("pooled_fit: no datasets");
    std::stable_sort(tasks.begin(), tasks.end(),
                     [](const MaskedDataset* x, const MaskedDataset* y) { return x->task_id < y->task_id; });
    return concatenate(tasks, 0);
}

/// Nuclear-norm fit on all tasks jointly with loss averaged over N = sum n_k.
inline Estimate pooled_fit(const std::vector<const MaskedDataset*>& tasks, double lambda1, double a,
                           const SolverConfig& cfg) {
    const MaskedDataset pooled = pool_tasks(tasks);
    Estimate e = fit_single(pooled, lambda1, a, cfg);
    e.stage = Stage::pooled;
    return e;
}

inline Estimate pooled_fit(const std::vector<MaskedDataset>& tasks, double lambda1, double a, const SolverConfig& cfg) {
    std::vector<const MaskedDataset*> ptrs;
    for (const auto& t : tasks) ptrs.push_back(&t);
    return pooled_fit(ptrs, lambda1, a, cfg);
}

/// Target-only correction D with ||D + A_tilde||_inf <= a, started from D = 0.
inline Estimate debias_fit(const MaskedDataset& target, const Matrix& a_tilde, double lambda2, double a,
                           const SolverConfig& cfg) {
    if (!(a > 0.0)) throw InvalidInput("debias_fit: box level must be positive");
    if (a_tilde.rows() != target.rows || a_tilde.cols() != target.cols)
        throw InvalidInput("debias_fit: pooled estimate shape mismatch");
    if (!(a_tilde.cwiseAbs().array() <= a * (1.0 + 1e-12)).all())
        throw InvalidInput("debias_fit: pooled estimate lies outside the box");
    const SquaredLoss loss(target, a_tilde);
    SolverConfig run = resolve_scaling(cfg, loss, target.rows, target.cols);
    run.lambda = lambda2;
    run.box_level = a;
    run.box_shift = a_tilde;
    auto res = lamm_solve(loss, Matrix::Zero(target.rows, target.cols), run);
    return {std::move(res.solution), lambda2, std::move(res.trace), Stage::debiased};
}

/// Residual standard deviation of a cheap pilot fit. The pilot keeps singular
/// directions above a tenth of the top singular value of the inverse-probability
/// zero fill.
inline double pilot_noise_scale(const MaskedDataset& data, double a, const SolverConfig& cfg) {
    validate(data, "pilot_noise_scale");
    const double cells = static_cast<double>(data.rows * data.cols);
    Matrix fill = Matrix::Zero(data.rows, data.cols);
    for (const auto& o : data.obs) fill(o.row, o.col) += o.value;
    fill *= cells / static_cast<double>(data.size());
    const Vector sigma = singular_values(fill);
    const double lambda = 2.0 * (sigma(0) / 10.0) / cells;
    SolverConfig pilot = cfg;
    pilot.max_iters = std::min(pilot.max_iters, 100);
    const Estimate e = fit_single(data, lambda, a, pilot);
    double mean = 0.0;
    for (const auto& o : data.obs) mean += o.value - e.matrix(o.row, o.col);
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (const auto& o : data.obs) {
        const double r = o.value - e.matrix(o.row, o.col) - mean;
        ss += r * r;
    }
    return data.size() > 1 ? std::sqrt(ss / static_cast<double>(data.size() - 1)) : 0.0;
}

struct TransferEstimate {
    Estimate combined;    // A_T = A_tilde + Delta_hat
    Estimate pooled;      // A_tilde
    Estimate correction;  // Delta_hat
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double noise_scale = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

/// Two-step transfer estimator. An empty source list pools the target alone
/// and then debiases on it.
inline TransferEstimate trans_mc(const MaskedDataset& target, const std::vector<const MaskedDataset*>& sources,
                                 const PenaltyPolicy& policy, double a, const SolverConfig& cfg) {
    policy.validate();
    validate(target, "trans_mc");
    std::vector<const MaskedDataset*> tasks{&target};
    for (const auto* s : sources) {
        validate(*s, "trans_mc");
        if (s->rows != target.rows || s->cols != target.cols)
            throw InvalidInput("trans_mc: dimension mismatch across tasks");
        tasks.push_back(s);
    }
    const MaskedDataset pooled = pool_tasks(tasks);
    const double n_total = static_cast<double>(pooled.size());
    const double n_target = static_cast<double>(target.size());

    TransferEstimate out;
    if (policy.mode == PenaltyMode::explicit_values) {
        out.lambda1 = policy.lambda1;
        out.lambda2 = policy.lambda2;
    } else {
        const double entry_bound = std::isnan(policy.a) ? a : policy.a;
        out.noise_scale = std::isnan(policy.v) ? pilot_noise_scale(target, a, cfg) : policy.v;
        out.lambda1 = theorem_penalty(policy.c1, entry_bound, out.noise_scale, n_total, target.rows, target.cols);
        out.lambda2 = theorem_penalty(policy.c2, entry_bound, out.noise_scale, n_target, target.rows, target.cols);
    }

    out.pooled = fit_single(pooled, out.lambda1, a, cfg);
    out.pooled.stage = Stage::pooled;
    out.correction = debias_fit(target, out.pooled.matrix, out.lambda2, a, cfg);
    out.combined.matrix = out.pooled.matrix + out.correction.matrix;
    out.combined.penalty_used = out.lambda2;
    out.combined.trace = out.correction.trace;
    out.combined.stage = Stage::combined;

    // n0/N >= a^2 log d / (max(a^2, v^2) r M) is only checked, never enforced.
    if (!std::isnan(out.noise_scale)) {
        const double rank = std::max<double>(1.0, static_cast<double>(numerical_rank(out.pooled.matrix, 1e-6)));
        const double d = static_cast<double>(target.rows + target.cols);
        const double big = static_cast<double>(std::max(target.rows, target.cols));
        const double v = out.noise_scale;
        const double need = a * a * std::log(d) / (std::max(a * a, v * v) * rank * big);
        if (n_target / n_total < need)
            out.warnings.push_back("target share n0/N = " + std::to_string(n_target / n_total) +
                                   " is below the technical bound " + std::to_string(need));
    }
    return out;
}

inline TransferEstimate trans_mc(const MaskedDataset& target, const std::vector<MaskedDataset>& sources,
                                 const PenaltyPolicy& policy, double a, const SolverConfig& cfg) {
    std::vector<const MaskedDataset*> ptrs;
    for (const auto& s : sources) ptrs.push_back(&s);
    return trans_mc(target, ptrs, policy, a, cfg);
}

}  // namespace transmc
