#pragma once

// Replicated experiments shared by the command-line tool and the acceptance
// suite: error-versus-sources curves, the mixed informative/noninformative
// design, rate scaling at zero contrast, and the frame-sequence pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "transmc/data_io.hpp"
#include "transmc/estimators.hpp"
#include "transmc/keyvalue.hpp"
#include "transmc/metrics.hpp"
#include "transmc/parallel.hpp"
#include "transmc/selection.hpp"
#include "transmc/simulation.hpp"

namespace transmc {

/// Method-side knobs of a benchmark run. Penalty multipliers apply to the
/// theorem-style formulas; a NaN noise scale means "known" for simulated
/// scenarios (the scenario's noise_sd) and "pilot estimate" for frame data.
struct BenchmarkSettings {
    PenaltyPolicy transfer;
    SelectionConfig selection;
    SolverConfig solver = default_solver_config();
    double box = std::numeric_limits<double>::quiet_NaN();  // NaN = scenario a_cap
    std::size_t reps = 20;
    unsigned jobs = default_jobs();

    void validate() const {
        transfer.validate();
        selection.validate();
        solver.validate();
        if (!std::isnan(box) && !(box > 0.0)) throw InvalidInput("benchmark: box must be positive");
        if (reps < 1) throw InvalidInput("benchmark: reps must be at least 1");
        if (jobs < 1) throw InvalidInput("benchmark: jobs must be at least 1");
    }

    void apply(const KeyValueFile& kv) {
        transfer.c1 = kv.get_double_or("c1", transfer.c1);
        transfer.c2 = kv.get_double_or("c2", transfer.c2);
        if (kv.has("lambda1") || kv.has("lambda2")) {
            transfer.mode = PenaltyMode::explicit_values;
            transfer.lambda1 = kv.get_double("lambda1");
            transfer.lambda2 = kv.get_double("lambda2");
        }
        if (kv.has("noise_scale")) {
            transfer.v = kv.get_or("noise_scale", "") == "pilot" ? std::numeric_limits<double>::quiet_NaN()
                                                                 : kv.get_double("noise_scale");
            selection.v = transfer.v;
        }
        selection.c0 = kv.get_double_or("c0", selection.c0);
        selection.ck = kv.get_double_or("ck", selection.ck);
        selection.folds = static_cast<int>(kv.get_int_or("folds", selection.folds));
        selection.epsilon0 = kv.get_double_or("epsilon0", selection.epsilon0);
        selection.c_tilde = kv.get_double_or("c_tilde", selection.c_tilde);
        if (kv.has("selection_seed")) selection.seed = kv.get_u64("selection_seed");
        if (kv.has("source_loss")) {
            const std::string m = kv.get("source_loss");
            if (m == "full_target") selection.source_loss = SourceLossMode::full_target;
            else if (m == "fold_average") selection.source_loss = SourceLossMode::fold_average;
            else throw ParseError("invalid value for 'source_loss'", 0);
        }
        box = kv.get_double_or("box", box);
        solver.epsilon = kv.get_double_or("solver_epsilon", solver.epsilon);
        solver.max_iters = static_cast<int>(kv.get_int_or("max_iters", solver.max_iters));
        if (kv.has("reps")) reps = static_cast<std::size_t>(kv.get_int("reps"));
        if (kv.has("jobs")) jobs = static_cast<unsigned>(kv.get_int("jobs"));
    }

    void write(KeyValueFile& kv) const {
        kv.set("c1", KeyValueFile::format(transfer.c1));
        kv.set("c2", KeyValueFile::format(transfer.c2));
        kv.set("c0", KeyValueFile::format(selection.c0));
        kv.set("ck", KeyValueFile::format(selection.ck));
        kv.set("folds", std::to_string(selection.folds));
        if (!std::isnan(selection.epsilon0)) kv.set("epsilon0", KeyValueFile::format(selection.epsilon0));
        kv.set("c_tilde", KeyValueFile::format(selection.c_tilde));
        kv.set("selection_seed", std::to_string(selection.seed));
        if (!std::isnan(transfer.v)) kv.set("noise_scale", KeyValueFile::format(transfer.v));
        if (!std::isnan(box)) kv.set("box", KeyValueFile::format(box));
        kv.set("solver_epsilon", KeyValueFile::format(solver.epsilon));
        kv.set("max_iters", std::to_string(solver.max_iters));
        kv.set("reps", std::to_string(reps));
    }
};

/// Settings tuned for the bundled presets. The theorem multipliers of 2 give
/// penalties far above the noise level once a = 30 enters max(a^2, v^2), so
/// the simulation presets use much smaller ones. On the single-group design
/// c = 0.3 is the smallest multiple of 0.05 with lambda >= 2 ||grad L(A0)||_op
/// on replicates 100..109. The mixed design trades that margin for sharper
/// selection; its constants were picked on the same replicates, never on 0..19.
inline BenchmarkSettings preset_settings(const std::string& name) {
    BenchmarkSettings s;
    if (name.starts_with("paper-")) {
        const double c = name.starts_with("paper-5.1") ? 0.3 : 0.05;
        s.transfer.c1 = c;
        s.transfer.c2 = c;
        s.selection.c0 = 0.05;
        s.selection.ck = 0.05;
        s.selection.c_tilde = 1.5;
        s.selection.epsilon0 = 3.0;
    } else if (name == "frames") {
        s.transfer.c1 = 0.1;
        s.transfer.c2 = 0.1;
        s.selection.c0 = 0.1;
        s.selection.ck = 0.1;
        s.reps = 10;
    }
    return s;
}

namespace detail {

inline double resolve_box(const BenchmarkSettings& s, const ScenarioSpec& spec) {
    return std::isnan(s.box) ? spec.a_cap : s.box;
}

inline PenaltyPolicy known_noise(PenaltyPolicy p, double v) {
    if (std::isnan(p.v)) p.v = v;
    return p;
}

inline SelectionConfig known_noise(SelectionConfig c, double v, std::uint64_t rep) {
    if (std::isnan(c.v)) c.v = v;
    c.seed = make_rng(c.seed, {rep})();
    return c;
}

// Target-only penalty: the debias formula on n0 observations, or lambda2 when
// penalties are explicit.
inline double single_penalty(const PenaltyPolicy& p, double box, const MaskedDataset& target) {
    if (p.mode == PenaltyMode::explicit_values) return p.lambda2;
    return theorem_penalty(p.c2, std::isnan(p.a) ? box : p.a, p.v, static_cast<double>(target.size()), target.rows,
                           target.cols);
}

inline std::vector<const MaskedDataset*> first_sources(const std::vector<MaskedDataset>& all, std::size_t k) {
    std::vector<const MaskedDataset*> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(&all[i]);
    return out;
}

}  // namespace detail

/// Mean error of TransMC against the number of (informative) sources used.
struct SourceCurve {
    std::vector<RepSummary> by_k;  // index k = sources 1..k used; k = 0 is the target alone

    bool nonincreasing_within_se() const {
        for (std::size_t k = 1; k < by_k.size(); ++k)
            if (by_k[k].mean > by_k[k - 1].mean + by_k[k - 1].standard_error()) return false;
        return true;
    }
    double relative_drop() const { return 1.0 - by_k.back().mean / by_k.front().mean; }
};

inline SourceCurve source_curve(const Scenario& sc, const BenchmarkSettings& s) {
    s.validate();
    const double box = detail::resolve_box(s, sc.spec);
    const PenaltyPolicy pol = detail::known_noise(s.transfer, sc.spec.noise_sd);
    const std::size_t big_k = sc.spec.num_sources();
    auto rows = run_replicates(s.reps, s.jobs, [&](std::size_t rep) {
        const ReplicateData d = draw_replicate(sc, rep);
        std::vector<double> errs;
        for (std::size_t k = 0; k <= big_k; ++k) {
            const auto est = trans_mc(d.target, detail::first_sources(d.sources, k), pol, box, s.solver);
            errs.push_back(rel_frob_error(est.combined.matrix, sc.target));
        }
        return errs;
    });
    SourceCurve c;
    for (std::size_t k = 0; k <= big_k; ++k) {
        std::vector<double> col;
        for (const auto& r : rows) col.push_back(r[k]);
        c.by_k.push_back(summarize(col));
    }
    return c;
}

inline void write_curve_csv(std::ostream& out, const SourceCurve& c) {
    out << "k_sources,mean_err,sd\n";
    for (std::size_t k = 0; k < c.by_k.size(); ++k)
        out << k << ',' << format_real(c.by_k[k].mean) << ',' << format_real(c.by_k[k].sd) << '\n';
}

/// Per-replicate outcome of the single / TransMC / S-TransMC comparison.
struct MixedReplicate {
    double single = 0.0;
    double transmc = 0.0;
    double s_transmc = 0.0;
    std::vector<int> selected;
};

struct MixedDesignResult {
    std::vector<MixedReplicate> reps;
    std::vector<int> informative;  // 1-based indices with the smallest contrast budget
    RepSummary single, transmc, s_transmc;

    std::size_t selective_wins() const {
        return static_cast<std::size_t>(
            std::count_if(reps.begin(), reps.end(), [](const auto& r) { return r.s_transmc < r.transmc; }));
    }
    std::size_t exact_selections() const {
        return static_cast<std::size_t>(
            std::count_if(reps.begin(), reps.end(), [&](const auto& r) { return r.selected == informative; }));
    }
    double mean_ratio() const { return transmc.mean / s_transmc.mean; }
};

/// Sources whose contrast budget is the smallest in the design count as
/// informative.
inline std::vector<int> informative_sources(const ScenarioSpec& spec) {
    std::vector<int> out;
    if (spec.contrast_nuclear.empty()) return out;
    const double h = *std::min_element(spec.contrast_nuclear.begin(), spec.contrast_nuclear.end());
    for (std::size_t k = 0; k < spec.contrast_nuclear.size(); ++k)
        if (spec.contrast_nuclear[k] <= h * (1.0 + spec.contrast_tolerance)) out.push_back(static_cast<int>(k + 1));
    return out;
}

inline MixedDesignResult mixed_design(const Scenario& sc, const BenchmarkSettings& s) {
    s.validate();
    const double box = detail::resolve_box(s, sc.spec);
    const PenaltyPolicy pol = detail::known_noise(s.transfer, sc.spec.noise_sd);
    MixedDesignResult out;
    out.informative = informative_sources(sc.spec);
    out.reps = run_replicates(s.reps, s.jobs, [&](std::size_t rep) {
        const ReplicateData d = draw_replicate(sc, rep);
        MixedReplicate r;
        const double lam = detail::single_penalty(pol, box, d.target);
        r.single = rel_frob_error(fit_single(d.target, lam, box, s.solver).matrix, sc.target);
        r.transmc = rel_frob_error(trans_mc(d.target, d.sources, pol, box, s.solver).combined.matrix, sc.target);
        const SelectionConfig sel = detail::known_noise(s.selection, sc.spec.noise_sd, rep);
        const auto st = s_trans_mc(d.target, d.sources, sel, pol, box, s.solver);
        r.s_transmc = rel_frob_error(st.estimate.combined.matrix, sc.target);
        r.selected = st.report.selected;
        return r;
    });
    std::vector<double> a, b, c;
    for (const auto& r : out.reps) {
        a.push_back(r.single);
        b.push_back(r.transmc);
        c.push_back(r.s_transmc);
    }
    out.single = summarize(a);
    out.transmc = summarize(b);
    out.s_transmc = summarize(c);
    return out;
}

/// One summary row of a benchmark table.
struct BenchmarkRow {
    std::string method;
    std::string scheme;
    RepSummary summary;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    SourceCurve curve;             // first scheme only
    std::size_t failed_reps = 0;   // replicates dropped after a solver failure
    std::vector<std::string> failures;
};

/// Per-replicate errors for single-target, TransMC on all sources and
/// S-TransMC, plus the TransMC curve over the first k sources. A replicate
/// whose solver diverges is recorded and skipped; the run continues.
inline BenchmarkReport run_benchmark(const ScenarioSpec& base, const BenchmarkSettings& s,
                                     const std::vector<SamplingKind>& schemes) {
    s.validate();
    if (schemes.empty()) throw InvalidInput("benchmark: no sampling scheme");
    struct Rep {
        bool ok = true;
        std::string why;
        double single = 0.0, transmc = 0.0, s_transmc = 0.0;
        std::vector<double> curve;
    };
    BenchmarkReport report;
    for (std::size_t si = 0; si < schemes.size(); ++si) {
        ScenarioSpec spec = base;
        spec.sampling = schemes[si];
        const Scenario sc = make_scenario(spec);
        const double box = detail::resolve_box(s, spec);
        const PenaltyPolicy pol = detail::known_noise(s.transfer, spec.noise_sd);
        const std::size_t big_k = spec.num_sources();
        const bool want_curve = si == 0;
        auto reps = run_replicates(s.reps, s.jobs, [&](std::size_t rep) {
            Rep r;
            try {
                const ReplicateData d = draw_replicate(sc, rep);
                const double lam = detail::single_penalty(pol, box, d.target);
                r.single = rel_frob_error(fit_single(d.target, lam, box, s.solver).matrix, sc.target);
                if (big_k > 0) {
                    r.transmc = rel_frob_error(trans_mc(d.target, d.sources, pol, box, s.solver).combined.matrix, sc.target);
                    const SelectionConfig sel = detail::known_noise(s.selection, spec.noise_sd, rep);
                    r.s_transmc = rel_frob_error(s_trans_mc(d.target, d.sources, sel, pol, box, s.solver).estimate.combined.matrix,
                                                 sc.target);
                }
                if (want_curve) {
                    for (std::size_t k = 0; k <= big_k; ++k) {
                        const auto est = trans_mc(d.target, detail::first_sources(d.sources, k), pol, box, s.solver);
                        r.curve.push_back(rel_frob_error(est.combined.matrix, sc.target));
                    }
                }
            } catch (const SolverDiverged& e) {
                r.ok = false;
                r.why = e.what();
            }
            return r;
        });
        std::vector<double> single, transmc, s_transmc;
        std::vector<std::vector<double>> curve(big_k + 1);
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const Rep& r = reps[i];
            if (!r.ok) {
                ++report.failed_reps;
                report.failures.push_back(std::string(to_string(schemes[si])) + " rep " + std::to_string(i) + ": " + r.why);
                continue;
            }
            single.push_back(r.single);
            transmc.push_back(r.transmc);
            s_transmc.push_back(r.s_transmc);
            for (std::size_t k = 0; k < r.curve.size(); ++k) curve[k].push_back(r.curve[k]);
        }
        if (single.empty()) throw SolverDiverged("benchmark: every replicate failed");
        const std::string name = to_string(schemes[si]);
        report.rows.push_back({"single", name, summarize(single)});
        if (big_k > 0) {
            report.rows.push_back({"transmc", name, summarize(transmc)});
            report.rows.push_back({"s-transmc", name, summarize(s_transmc)});
        }
        if (want_curve)
            for (auto& col : curve) report.curve.by_k.push_back(summarize(col));
    }
    return report;
}

inline void write_benchmark_csv(std::ostream& out, const BenchmarkReport& r) {
    write_summary_header(out);
    for (const auto& row : r.rows) write_summary_row(out, row.method, row.scheme, row.summary);
}

/// Zero-contrast rate check: the target plus (m - 1) identical-matrix sources
/// of n0 observations each, so the pooled size is N = m n0.
struct RateResult {
    std::vector<double> pooled_sizes;
    std::vector<double> mean_sq_error;  // mean over reps of the squared relative Frobenius error
    double slope = 0.0;                 // least-squares slope of log error on log N
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("loglog_slope: need two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline RateResult rate_scaling(ScenarioSpec spec, const BenchmarkSettings& s,
                               const std::vector<int>& multiples = {1, 2, 4, 8}) {
    s.validate();
    if (multiples.empty()) throw InvalidInput("rate_scaling: no pooled sizes");
    const int most = *std::max_element(multiples.begin(), multiples.end());
    if (*std::min_element(multiples.begin(), multiples.end()) < 1) throw InvalidInput("rate_scaling: multiples must be >= 1");
    spec.contrast_nuclear.assign(static_cast<std::size_t>(most - 1), 0.0);
    spec.nk_fraction = spec.n0_fraction;
    const Scenario sc = make_scenario(spec);
    const double box = detail::resolve_box(s, spec);
    const PenaltyPolicy pol = detail::known_noise(s.transfer, spec.noise_sd);

    auto rows = run_replicates(s.reps, s.jobs, [&](std::size_t rep) {
        const ReplicateData d = draw_replicate(sc, rep);
        std::vector<double> errs;
        for (int m : multiples) {
            const auto est =
                trans_mc(d.target, detail::first_sources(d.sources, static_cast<std::size_t>(m - 1)), pol, box, s.solver);
            const double e = rel_frob_error(est.combined.matrix, sc.target);
            errs.push_back(e * e);
        }
        return errs;
    });
    RateResult out;
    for (std::size_t i = 0; i < multiples.size(); ++i) {
        double acc = 0.0;
        for (const auto& r : rows) acc += r[i];
        out.pooled_sizes.push_back(static_cast<double>(multiples[i]) * static_cast<double>(spec.n0()));
        out.mean_sq_error.push_back(acc / static_cast<double>(rows.size()));
    }
    out.slope = loglog_slope(out.pooled_sizes, out.mean_sq_error);
    return out;
}

/// Holdout errors for one target frame under each method.
struct FrameScores {
    std::size_t frame = 0;
    HoldoutErrors single, transmc, s_transmc;
    std::vector<int> selected;  // 1-based positions in the frame's source list
    bool has_selection = true;
};

/// Target frame with a random holdout, its window of neighbouring frames as
/// sources, and the three estimators scored on the held-out entries.
inline FrameScores score_frame(const MaskedDataset& target, const std::vector<const MaskedDataset*>& sources,
                               double holdout_fraction, std::uint64_t seed, const BenchmarkSettings& s, double box,
                               bool with_selection = true) {
    const HoldoutSplit split = holdout_split(target, holdout_fraction, seed);
    FrameScores f;
    const double v = std::isnan(s.transfer.v) ? pilot_noise_scale(split.train, box, s.solver) : s.transfer.v;
    PenaltyPolicy pol = s.transfer;
    pol.v = v;
    const double lam = detail::single_penalty(pol, box, split.train);
    f.single = holdout_errors(fit_single(split.train, lam, box, s.solver).matrix, split.test);
    f.transmc = holdout_errors(trans_mc(split.train, sources, pol, box, s.solver).combined.matrix, split.test);
    f.has_selection = with_selection;
    if (!with_selection) return f;
    SelectionConfig sel = s.selection;
    if (std::isnan(sel.v)) sel.v = v;
    sel.seed = make_rng(sel.seed, {seed})();
    const auto st = s_trans_mc(split.train, sources, sel, pol, box, s.solver);
    f.s_transmc = holdout_errors(st.estimate.combined.matrix, split.test);
    f.selected = st.report.selected;
    return f;
}

/// Box level for frame data: 1.25 x the largest observed magnitude.
inline double frame_box(const std::vector<MaskedDataset>& frames) {
    double peak = 0.0;
    for (const auto& f : frames)
        for (const auto& o : f.obs) peak = std::max(peak, std::abs(o.value));
    return peak > 0.0 ? 1.25 * peak : 1.0;
}

inline std::vector<FrameScores> frame_pipeline(const std::vector<MaskedDataset>& frames,
                                               const std::vector<std::size_t>& targets, int half_width,
                                               double holdout_fraction, std::uint64_t seed,
                                               const BenchmarkSettings& s, bool with_selection = true) {
    s.validate();
    const double box = std::isnan(s.box) ? frame_box(frames) : s.box;
    return run_replicates(targets.size(), s.jobs, [&](std::size_t i) {
        const std::size_t t = targets[i];
        if (t >= frames.size()) throw InvalidInput("frame_pipeline: target index out of range");
        std::vector<const MaskedDataset*> sources;
        for (long long off = -half_width; off <= half_width; ++off) {
            const long long idx = static_cast<long long>(t) + off;
            if (off == 0 || idx < 0 || idx >= static_cast<long long>(frames.size())) continue;
            sources.push_back(&frames[static_cast<std::size_t>(idx)]);
        }
        FrameScores f = score_frame(frames[t], sources, holdout_fraction, make_rng(seed, {t})(), s, box, with_selection);
        f.frame = t;
        return f;
    });
}

inline void write_frame_scores_csv(std::ostream& out, const std::vector<FrameScores>& scores) {
    out << "frame,method,E,RE\n";
    for (const auto& f : scores) {
        out << f.frame << ",single," << format_real(f.single.e) << ',' << format_real(f.single.re) << '\n';
        out << f.frame << ",transmc," << format_real(f.transmc.e) << ',' << format_real(f.transmc.re) << '\n';
        if (f.has_selection)
            out << f.frame << ",s-transmc," << format_real(f.s_transmc.e) << ',' << format_real(f.s_transmc.re) << '\n';
    }
}

}  // namespace transmc
