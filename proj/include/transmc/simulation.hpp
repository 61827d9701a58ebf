#pragma once

// Synthetic designs: a low-rank target with an exp(5 U[0,1]) spectrum,
// sources at controlled nuclear-norm distance, uniform or row x column
// product sampling, and Gaussian observation noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/error.hpp"
#include "transmc/keyvalue.hpp"
#include "transmc/linalg.hpp"
#include "transmc/random.hpp"

namespace transmc {

enum class SamplingKind { uniform, row_col_product, explicit_probs };

inline std::string to_string(SamplingKind k) {
    switch (k) {
        case SamplingKind::uniform: return "uniform";
        case SamplingKind::row_col_product: return "row_col_product";
        case SamplingKind::explicit_probs: return "explicit";
    }
    return "?";
}

inline SamplingKind parse_sampling_kind(const std::string& s) {
    if (s == "uniform" || s == "ss1") return SamplingKind::uniform;
    if (s == "row_col_product" || s == "product" || s == "ss2") return SamplingKind::row_col_product;
    if (s == "explicit") return SamplingKind::explicit_probs;
    throw InvalidInput("unknown sampling kind '" + s + "'");
}

/// Quantities from the sampling assumptions, reported but never enforced.
struct SamplingDiagnostics {
    double mu_hat = 1.0;            // 1 / (m1 m2 min P)
    double max_prob = 0.0;
    double max_row_marginal = 0.0;
    double max_col_marginal = 0.0;
    double marginal_constant = 0.0;  // m * max(row, col marginal)
    double spread_constant = 0.0;    // m log^3(d) max P
};

class SamplingModel {
public:
    static SamplingModel uniform(std::int64_t rows, std::int64_t cols) {
        SamplingModel s(SamplingKind::uniform, rows, cols);
        s.row_probs_ = Vector::Constant(rows, 1.0 / static_cast<double>(rows));
        s.col_probs_ = Vector::Constant(cols, 1.0 / static_cast<double>(cols));
        s.finish();
        return s;
    }

    static SamplingModel row_col_product(Vector row_probs, Vector col_probs) {
        check_probs(row_probs, "row probabilities");
        check_probs(col_probs, "column probabilities");
        SamplingModel s(SamplingKind::row_col_product, row_probs.size(), col_probs.size());
        s.row_probs_ = std::move(row_probs);
        s.col_probs_ = std::move(col_probs);
        s.finish();
        return s;
    }

    static SamplingModel explicit_probs(Matrix probs) {
        if (probs.size() == 0) throw InvalidInput("SamplingModel: empty probability matrix");
        if (!probs.allFinite() || (probs.array() < 0.0).any())
            throw InvalidInput("SamplingModel: probabilities must be finite and nonnegative");
        if (std::abs(probs.sum() - 1.0) > 1e-10) throw InvalidInput("SamplingModel: probabilities must sum to 1");
        SamplingModel s(SamplingKind::explicit_probs, probs.rows(), probs.cols());
        s.row_probs_ = probs.rowwise().sum();
        s.col_probs_ = probs.colwise().sum().transpose();
        s.probs_ = std::move(probs);
        s.flat_cdf_ = cumulative(s.probs_.data(), s.probs_.size());
        s.finish();
        return s;
    }

    SamplingKind kind() const { return kind_; }
    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    const Vector& row_probs() const { return row_probs_; }
    const Vector& col_probs() const { return col_probs_; }
    const SamplingDiagnostics& diagnostics() const { return diag_; }

    /// Dense P with P_jl = Pr(entry (j, l) is sampled).
    Matrix probability_matrix() const {
        if (kind_ == SamplingKind::explicit_probs) return probs_;
        return row_probs_ * col_probs_.transpose();
    }

    /// One coordinate draw.
    std::pair<std::int64_t, std::int64_t> draw(Rng& rng) const {
        switch (kind_) {
            case SamplingKind::uniform: {
                std::uniform_int_distribution<std::int64_t> r(0, rows_ - 1), c(0, cols_ - 1);
                const auto i = r(rng);
                return {i, c(rng)};
            }
            case SamplingKind::row_col_product: {
                const auto i = pick(row_cdf_, rng);
                return {i, pick(col_cdf_, rng)};
            }
            case SamplingKind::explicit_probs: {
                const auto flat = pick(flat_cdf_, rng);
                return {flat % rows_, flat / rows_};
            }
        }
        return {0, 0};
    }

private:
    SamplingModel(SamplingKind k, std::int64_t rows, std::int64_t cols) : kind_(k), rows_(rows), cols_(cols) {
        if (rows < 1 || cols < 1) throw InvalidInput("SamplingModel: dimensions must be positive");
    }

    static void check_probs(const Vector& p, const char* what) {
        if (p.size() == 0) throw InvalidInput(std::string("SamplingModel: empty ") + what);
        if (!p.allFinite() || (p.array() < 0.0).any())
            throw InvalidInput(std::string("SamplingModel: ") + what + " must be finite and nonnegative");
        if (std::abs(p.sum() - 1.0) > 1e-10) throw InvalidInput(std::string("SamplingModel: ") + what + " must sum to 1");
    }

    static std::vector<double> cumulative(const double* p, Eigen::Index n) {
        std::vector<double> cdf(static_cast<std::size_t>(n));
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) cdf[static_cast<std::size_t>(i)] = (acc += p[i]);
        return cdf;
    }

    /// Inverse-CDF draw; zero-probability cells are never returned.
    static std::int64_t pick(const std::vector<double>& cdf, Rng& rng) {
        std::uniform_real_distribution<double> u(0.0, cdf.back());
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u(rng));
        return std::min<std::int64_t>(it - cdf.begin(), static_cast<std::int64_t>(cdf.size()) - 1);
    }

    void finish() {
        if (kind_ == SamplingKind::row_col_product) {
            row_cdf_ = cumulative(row_probs_.data(), row_probs_.size());
            col_cdf_ = cumulative(col_probs_.data(), col_probs_.size());
        }
        const Matrix p = probability_matrix();
        const double cells = static_cast<double>(rows_ * cols_);
        const double m = static_cast<double>(std::min(rows_, cols_));
        const double d = static_cast<double>(rows_ + cols_);
        const double min_p = p.minCoeff();
        diag_.mu_hat = min_p > 0.0 ? 1.0 / (cells * min_p) : std::numeric_limits<double>::infinity();
        diag_.max_prob = p.maxCoeff();
        diag_.max_row_marginal = row_probs_.maxCoeff();
        diag_.max_col_marginal = col_probs_.maxCoeff();
        diag_.marginal_constant = m * std::max(diag_.max_row_marginal, diag_.max_col_marginal);
        diag_.spread_constant = m * std::pow(std::log(d), 3) * diag_.max_prob;
    }

    SamplingKind kind_;
    std::int64_t rows_;
    std::int64_t cols_;
    Vector row_probs_;
    Vector col_probs_;
    Matrix probs_;
    std::vector<double> row_cdf_;
    std::vector<double> col_cdf_;
    std::vector<double> flat_cdf_;
    SamplingDiagnostics diag_;
};

/// Configuration of a simulated experiment. contrast_nuclear holds one target
/// ||A_k - A_0||_* per source; its length is K.
struct ScenarioSpec {
    std::string name = "custom";
    std::int64_t rows = 60;
    std::int64_t cols = 30;
    std::int64_t rank = 3;
    std::string spectrum = "exp5_uniform";
    double a_cap = 30.0;
    /// "to_cap": A0 is scaled so that max |entry| equals a_cap.
    /// "shrink_only": A0 is scaled down only when it exceeds a_cap.
    std::string target_scaling = "to_cap";
    std::vector<double> contrast_nuclear;
    double contrast_tolerance = 0.025;
    /// Number of nonzero contrast singular values; 0 means min(rows, cols).
    std::int64_t contrast_rank = 0;
    /// "independent": each contrast gets fresh random factors.
    /// "shared": contrasts reuse the target's factors, A_k = A0 - U diag(s_k) V^T.
    std::string contrast_factors = "independent";
    double n0_fraction = 0.2;
    double nk_fraction = 0.1;
    double noise_sd = 1.0;
    SamplingKind sampling = SamplingKind::uniform;
    std::uint64_t seed = 1;

    std::size_t num_sources() const { return contrast_nuclear.size(); }
    std::size_t n0() const { return sample_count(n0_fraction); }
    std::size_t nk() const { return sample_count(nk_fraction); }

    std::size_t sample_count(double fraction) const {
        return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows * cols)));
    }

    void validate() const {
        if (rows < 1 || cols < 1) throw InvalidInput("scenario: dimensions must be positive");
        if (rank < 1 || rank > std::min(rows, cols))
            throw InvalidInput("scenario: rank must lie in [1, min(rows, cols)]");
        if (spectrum != "exp5_uniform") throw InvalidInput("scenario: unknown spectrum law '" + spectrum + "'");
        if (!(a_cap > 0.0)) throw InvalidInput("scenario: a_cap must be positive");
        if (target_scaling != "to_cap" && target_scaling != "shrink_only")
            throw InvalidInput("scenario: target_scaling must be to_cap or shrink_only");
        for (double h : contrast_nuclear)
            if (!(h >= 0.0)) throw InvalidInput("scenario: contrast targets must be nonnegative");
        if (contrast_rank < 0 || contrast_rank > std::min(rows, cols))
            throw InvalidInput("scenario: contrast_rank must lie in [0, min(rows, cols)]");
        if (contrast_factors != "independent" && contrast_factors != "shared")
            throw InvalidInput("scenario: contrast_factors must be independent or shared");
        if (!(contrast_tolerance > 0.0)) throw InvalidInput("scenario: contrast tolerance must be positive");
        if (!(n0_fraction > 0.0 && n0_fraction <= 1.0) || !(nk_fraction > 0.0 && nk_fraction <= 1.0))
            throw InvalidInput("scenario: sample fractions must lie in (0, 1]");
        if (n0() < 1 || (num_sources() > 0 && nk() < 1)) throw InvalidInput("scenario: sample sizes round to zero");
        if (!(noise_sd >= 0.0)) throw InvalidInput("scenario: noise_sd must be nonnegative");
        if (sampling == SamplingKind::explicit_probs)
            throw InvalidInput("scenario: explicit sampling is not generated by scenarios");
    }

    KeyValueFile to_keyvalue() const {
        KeyValueFile kv;
        kv.set("name", name);
        kv.set("rows", std::to_string(rows));
        kv.set("cols", std::to_string(cols));
        kv.set("rank", std::to_string(rank));
        kv.set("spectrum", spectrum);
        kv.set("a_cap", KeyValueFile::format(a_cap));
        kv.set("target_scaling", target_scaling);
        kv.set("contrast_nuclear", KeyValueFile::join(contrast_nuclear));
        kv.set("contrast_tolerance", KeyValueFile::format(contrast_tolerance));
        kv.set("contrast_rank", std::to_string(contrast_rank));
        kv.set("contrast_factors", contrast_factors);
        kv.set("n0_fraction", KeyValueFile::format(n0_fraction));
        kv.set("nk_fraction", KeyValueFile::format(nk_fraction));
        kv.set("noise_sd", KeyValueFile::format(noise_sd));
        kv.set("sampling", to_string(sampling));
        kv.set("seed", std::to_string(seed));
        return kv;
    }

    static ScenarioSpec from_keyvalue(const KeyValueFile& kv) {
        ScenarioSpec s;
        s.name = kv.get_or("name", s.name);
        s.rows = kv.get_int("rows");
        s.cols = kv.get_int("cols");
        s.rank = kv.get_int("rank");
        s.spectrum = kv.get_or("spectrum", s.spectrum);
        s.a_cap = kv.get_double_or("a_cap", s.a_cap);
        s.target_scaling = kv.get_or("target_scaling", s.target_scaling);
        s.contrast_nuclear = kv.has("contrast_nuclear") ? kv.get_double_list("contrast_nuclear") : std::vector<double>{};
        s.contrast_tolerance = kv.get_double_or("contrast_tolerance", s.contrast_tolerance);
        s.contrast_rank = kv.get_int_or("contrast_rank", s.contrast_rank);
        s.contrast_factors = kv.get_or("contrast_factors", s.contrast_factors);
        s.n0_fraction = kv.get_double_or("n0_fraction", s.n0_fraction);
        s.nk_fraction = kv.get_double_or("nk_fraction", s.nk_fraction);
        s.noise_sd = kv.get_double_or("noise_sd", s.noise_sd);
        s.sampling = parse_sampling_kind(kv.get_or("sampling", "uniform"));
        if (kv.has("seed")) s.seed = kv.get_u64("seed");
        s.validate();
        return s;
    }
};

/// Contrast budgets at reduced dimensions keep h^2 / (m1 m2) fixed.
inline double scale_contrast(double h, std::int64_t rows, std::int64_t cols, std::int64_t ref_rows = 300,
                             std::int64_t ref_cols = 150) {
    return h * std::sqrt(static_cast<double>(rows * cols) / static_cast<double>(ref_rows * ref_cols));
}

/// Named designs. "paper-5.1-small" is 60 x 30 with rank 3. "paper-5.2-small"
/// is 90 x 45 with rank 3, which keeps n0 / (r (m1 + m2)) = 2 and
/// nk / (r (m1 + m2)) = 1.5 as in the full-size design; at 60 x 30 each source
/// carries barely one observation per degree of freedom and the groups cannot
/// be told apart. Its contrasts have the target's rank.
inline ScenarioSpec preset(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    s.seed = 20170903;
    auto base = [&](bool small) {
        s.rows = small ? 60 : 300;
        s.cols = small ? 30 : 150;
        s.rank = small ? 3 : 10;
        s.a_cap = 30.0;
        s.n0_fraction = 0.2;
        s.noise_sd = 1.0;
    };
    if (name == "paper-5.1" || name == "paper-5.1-small") {
        const bool small = name.ends_with("-small");
        base(small);
        s.nk_fraction = 0.1;
        s.contrast_nuclear.assign(10, scale_contrast(400.0, s.rows, s.cols));
    } else if (name == "paper-5.2" || name == "paper-5.2-small") {
        const bool small = name.ends_with("-small");
        base(small);
        if (small) {
            s.rows = 90;
            s.cols = 45;
            s.seed = 5;
        }
        s.contrast_rank = s.rank;
        s.nk_fraction = 0.15;
        s.contrast_nuclear.assign(5, scale_contrast(400.0, s.rows, s.cols));
        s.contrast_nuclear.insert(s.contrast_nuclear.end(), 5, scale_contrast(1200.0, s.rows, s.cols));
    } else {
        throw InvalidInput("unknown preset '" + name + "'");
    }
    s.validate();
    return s;
}

inline std::vector<std::string> preset_names() {
    return {"paper-5.1", "paper-5.1-small", "paper-5.2", "paper-5.2-small"};
}

inline Matrix standard_normal_matrix(std::int64_t rows, std::int64_t cols, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix g(rows, cols);
    for (std::int64_t j = 0; j < cols; ++j)
        for (std::int64_t i = 0; i < rows; ++i) g(i, j) = n01(rng);
    return g;
}

/// Random orthonormal factors from the SVD of a Gaussian matrix.
inline SvdFactors random_orthonormal_factors(std::int64_t rows, std::int64_t cols, Rng& rng) {
    return svd(standard_normal_matrix(rows, cols, rng));
}

/// Exact-rank target: A0 = U diag(s) V^T with s = sort_desc(exp(5 U[0,1])),
/// scaled once so that ||A0||_inf = a_cap (or only shrunk, see target_scaling).
inline Matrix gen_target(const ScenarioSpec& spec, const SvdFactors& f, Rng& rng) {
    spec.validate();
    if (f.u.rows() != spec.rows || f.v.rows() != spec.cols || f.u.cols() < spec.rank)
        throw InvalidInput("gen_target: factor shapes do not match the scenario");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> s(static_cast<std::size_t>(spec.rank));
    for (auto& x : s) x = std::exp(5.0 * u01(rng));
    std::sort(s.begin(), s.end(), std::greater<>());
    const Eigen::Map<const Vector> sv(s.data(), spec.rank);
    Matrix a0 = f.u.leftCols(spec.rank) * sv.asDiagonal() * f.v.leftCols(spec.rank).transpose();
    const double peak = a0.cwiseAbs().maxCoeff();
    if (spec.target_scaling == "to_cap" || peak > spec.a_cap) a0 *= spec.a_cap / peak;
    return a0;
}

inline Matrix gen_target(const ScenarioSpec& spec, Rng& rng) {
    const SvdFactors f = random_orthonormal_factors(spec.rows, spec.cols, rng);
    return gen_target(spec, f, rng);
}

struct GeneratedSources {
    std::vector<Matrix> matrices;
    std::vector<double> achieved_contrast;  // ||A_k - A_0||_*
    std::vector<int> attempts;
};

/// Each source is A0 + Delta_k, Delta_k having U[0,1] singular values on random
/// factors (or on `shared`, negated), scaled to its nuclear-norm budget.
/// Draws whose entries break a_cap are redrawn up to 50 times.
inline GeneratedSources gen_sources(const Matrix& a0, const ScenarioSpec& spec, Rng& rng,
                                    const SvdFactors* shared = nullptr) {
    spec.validate();
    if (a0.rows() != spec.rows || a0.cols() != spec.cols) throw InvalidInput("gen_sources: target shape mismatch");
    constexpr int max_attempts = 50;
    GeneratedSources out;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const std::int64_t q = spec.contrast_rank > 0 ? spec.contrast_rank : std::min(spec.rows, spec.cols);
    for (double h : spec.contrast_nuclear) {
        if (h == 0.0) {
            out.matrices.push_back(a0);
            out.achieved_contrast.push_back(0.0);
            out.attempts.push_back(0);
            continue;
        }
        bool done = false;
        for (int attempt = 1; attempt <= max_attempts && !done; ++attempt) {
            const SvdFactors fresh = shared ? SvdFactors{} : random_orthonormal_factors(spec.rows, spec.cols, rng);
            const SvdFactors& f = shared ? *shared : fresh;
            Vector s(q);
            for (std::int64_t i = 0; i < q; ++i) s(i) = u01(rng);
            Matrix delta = f.u.leftCols(q) * s.asDiagonal() * f.v.leftCols(q).transpose();
            if (shared) delta = -delta;
            delta *= h / nuclear_norm(delta);
            const double achieved = nuclear_norm(delta);
            if (std::abs(achieved - h) > spec.contrast_tolerance * h) continue;
            Matrix ak = a0 + delta;
            if (ak.cwiseAbs().maxCoeff() > spec.a_cap) continue;
            out.matrices.push_back(std::move(ak));
            out.achieved_contrast.push_back(achieved);
            out.attempts.push_back(attempt);
            done = true;
        }
        if (!done)
            throw InvalidInput("gen_sources: contrast of nuclear norm " + std::to_string(h) +
                               " keeps breaking the entry cap " + std::to_string(spec.a_cap));
    }
    return out;
}

/// Uniform, or R x C with R and C uniform draws normalised to sum to one.
inline SamplingModel gen_sampling(const ScenarioSpec& spec, Rng& rng) {
    if (spec.sampling == SamplingKind::uniform) return SamplingModel::uniform(spec.rows, spec.cols);
    if (spec.sampling != SamplingKind::row_col_product) throw InvalidInput("gen_sampling: unsupported kind");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vector r(spec.rows), c(spec.cols);
    for (auto& x : r) x = u01(rng);
    for (auto& x : c) x = u01(rng);
    r /= r.sum();
    c /= c.sum();
    return SamplingModel::row_col_product(std::move(r), std::move(c));
}

/// n draws with replacement from the sampling law, Y = A[r, c] + N(0, v^2).
inline MaskedDataset sample_observations(const Matrix& a, const SamplingModel& sampling, std::size_t n, double v,
                                         Rng& rng, int task_id = 0) {
    if (n < 1) throw InvalidInput("sample_observations: n must be at least 1");
    if (a.rows() != sampling.rows() || a.cols() != sampling.cols())
        throw InvalidInput("sample_observations: sampling shape mismatch");
    if (!(v >= 0.0)) throw InvalidInput("sample_observations: noise sd must be nonnegative");
    std::normal_distribution<double> noise(0.0, 1.0);
    MaskedDataset d{a.rows(), a.cols(), {}, task_id};
    d.obs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [r, c] = sampling.draw(rng);
        const double xi = noise(rng);
        d.obs.push_back({r, c, a(r, c) + v * xi});
    }
    return d;
}

inline MaskedDataset sample_observations(const Matrix& a, const SamplingModel& sampling, std::size_t n, double v,
                                         std::uint64_t seed, int task_id = 0) {
    Rng rng = make_rng(seed);
    return sample_observations(a, sampling, n, v, rng, task_id);
}

/// The fixed part of an experiment: matrices and sampling laws. Only the
/// observations change between replications.
struct Scenario {
    ScenarioSpec spec;
    Matrix target;
    GeneratedSources sources;
    std::vector<SamplingModel> sampling;  // index 0 = target, k = source k
};

namespace stream {
constexpr std::uint64_t target = 1;
constexpr std::uint64_t sources = 2;
constexpr std::uint64_t sampling = 3;
constexpr std::uint64_t observations = 4;
}  // namespace stream

inline Scenario make_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Scenario sc{spec, {}, {}, {}};
    Rng target_rng = make_rng(spec.seed, {stream::target});
    const SvdFactors factors = random_orthonormal_factors(spec.rows, spec.cols, target_rng);
    sc.target = gen_target(spec, factors, target_rng);
    Rng source_rng = make_rng(spec.seed, {stream::sources});
    sc.sources = gen_sources(sc.target, spec, source_rng, spec.contrast_factors == "shared" ? &factors : nullptr);
    for (std::size_t k = 0; k <= spec.num_sources(); ++k) {
        Rng rng = make_rng(spec.seed, {stream::sampling, k});
        sc.sampling.push_back(gen_sampling(spec, rng));
    }
    return sc;
}

struct ReplicateData {
    MaskedDataset target;
    std::vector<MaskedDataset> sources;
};

/// Observations for one replication; streams depend on (scenario seed, rep, task).
inline ReplicateData draw_replicate(const Scenario& sc, std::uint64_t rep) {
    ReplicateData out;
    Rng rng0 = make_rng(sc.spec.seed, {stream::observations, rep, 0});
    out.target = sample_observations(sc.target, sc.sampling[0], sc.spec.n0(), sc.spec.noise_sd, rng0, 0);
    for (std::size_t k = 1; k <= sc.spec.num_sources(); ++k) {
        Rng rng = make_rng(sc.spec.seed, {stream::observations, rep, k});
        out.sources.push_back(sample_observations(sc.sources.matrices[k - 1], sc.sampling[k], sc.spec.nk(),
                                                  sc.spec.noise_sd, rng, static_cast<int>(k)));
    }
    return out;
}

/// Smooth sequence of partially observed lat x lon maps: a latitude profile
/// plus rotating longitudinal harmonics with slowly drifting amplitudes and a
/// small frame-specific rank-one disturbance.
struct FrameSequenceSpec {
    std::int64_t rows = 91;
    std::int64_t cols = 180;
    std::int64_t frames = 30;
    double missing_fraction = 0.25;
    double noise_sd = 1.0;
    int harmonics = 2;
    double rotation_period = 288.0;  // frames per full turn in longitude
    double disturbance = 1.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (rows < 2 || cols < 2) throw InvalidInput("frame sequence: need at least 2 x 2 maps");
        if (frames < 1) throw InvalidInput("frame sequence: need at least one frame");
        if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
            throw InvalidInput("frame sequence: missing fraction must lie in [0, 1)");
        if (!(noise_sd >= 0.0)) throw InvalidInput("frame sequence: noise sd must be nonnegative");
        if (harmonics < 0) throw InvalidInput("frame sequence: harmonics must be nonnegative");
        if (!(rotation_period > 0.0)) throw InvalidInput("frame sequence: rotation period must be positive");
    }
};

struct FrameSequence {
    std::vector<Matrix> truth;
    std::vector<MaskedDataset> observed;  // no repeated coordinates within a frame
};

inline FrameSequence make_frame_sequence(const FrameSequenceSpec& spec) {
    spec.validate();
    constexpr double pi = 3.14159265358979323846;
    Rng rng = make_rng(spec.seed, {stream::target});
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);

    std::vector<double> phase(static_cast<std::size_t>(spec.harmonics)), drift(phase.size()), amp(phase.size());
    for (std::size_t h = 0; h < phase.size(); ++h) {
        phase[h] = 2.0 * pi * u01(rng);
        drift[h] = 2.0 * pi * u01(rng);
        amp[h] = 8.0 / static_cast<double>(h + 1) * (0.75 + 0.5 * u01(rng));
    }
    const double crest = 10.0 + 10.0 * u01(rng);

    Vector lat(spec.rows), lon(spec.cols);
    for (std::int64_t i = 0; i < spec.rows; ++i)
        lat(i) = -90.0 + 180.0 * static_cast<double>(i) / static_cast<double>(spec.rows - 1);
    for (std::int64_t j = 0; j < spec.cols; ++j)
        lon(j) = -pi + 2.0 * pi * static_cast<double>(j) / static_cast<double>(spec.cols);

    FrameSequence out;
    for (std::int64_t t = 0; t < spec.frames; ++t) {
        const double turn = 2.0 * pi * static_cast<double>(t) / spec.rotation_period;
        Matrix a(spec.rows, spec.cols);
        for (std::int64_t i = 0; i < spec.rows; ++i) {
            const double x = lat(i);
            const double base = 5.0 + crest * std::exp(-(x / 25.0) * (x / 25.0));
            for (std::int64_t j = 0; j < spec.cols; ++j) {
                double val = base;
                for (std::size_t h = 0; h < phase.size(); ++h) {
                    const double k = static_cast<double>(h + 1);
                    const double width = 30.0 * k;
                    const double level = amp[h] * (1.0 + 0.1 * std::sin(2.0 * pi * static_cast<double>(t) / 60.0 + drift[h]));
                    val += level * std::exp(-(x / width) * (x / width)) * std::cos(k * (lon(j) - turn) + phase[h]);
                }
                a(i, j) = val;
            }
        }
        Vector u(spec.rows), w(spec.cols);
        for (auto& x : u) x = n01(rng);
        for (auto& x : w) x = n01(rng);
        a += spec.disturbance * (u / u.norm()) * (w / w.norm()).transpose() *
             std::sqrt(static_cast<double>(spec.rows * spec.cols)) / 4.0;

        Rng obs_rng = make_rng(spec.seed, {stream::observations, static_cast<std::uint64_t>(t)});
        std::vector<std::int64_t> cells(static_cast<std::size_t>(spec.rows * spec.cols));
        for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = static_cast<std::int64_t>(c);
        std::shuffle(cells.begin(), cells.end(), obs_rng);
        const auto keep = static_cast<std::size_t>(
            std::llround((1.0 - spec.missing_fraction) * static_cast<double>(cells.size())));
        cells.resize(std::max<std::size_t>(keep, 1));
        std::sort(cells.begin(), cells.end());
        MaskedDataset d{spec.rows, spec.cols, {}, static_cast<int>(t)};
        d.obs.reserve(cells.size());
        for (auto c : cells) {
            const std::int64_t j = c / spec.rows, i = c % spec.rows;
            d.obs.push_back({i, j, a(i, j) + spec.noise_sd * n01(obs_rng)});
        }
        out.truth.push_back(std::move(a));
        out.observed.push_back(std::move(d));
    }
    return out;
}

}  // namespace transmc
