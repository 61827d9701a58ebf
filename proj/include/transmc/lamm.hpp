#pragma once

// Local adaptive majorize-minimization (LAMM) for
//     min_{A in box} L(A) + lambda * ||A||_*
// with a squared-error loss over observed entries as the main loss oracle.

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/error.hpp"
#include "transmc/linalg.hpp"

namespace transmc {

/// A loss oracle supplies L(A) and grad L(A). Both must be pure.
template <class L>
concept LossOracle = requires(const L& loss, const Matrix& a) {
    { loss.value(a) } -> std::convertible_to<double>;
    { loss.gradient(a) } -> std::convertible_to<Matrix>;
};

struct SolverConfig {
    double phi0 = 1e-3;
    double gamma = 2.0;
    double lambda = 0.0;
    double epsilon = 1e-5;
    int max_iters = 500;
    double box_level = 30.0;
    /// When set, the constraint is |A + box_shift| <= box_level entrywise.
    std::optional<Matrix> box_shift;
    /// Read by the estimators, not by lamm_solve: when true, phi0 is taken
    /// relative to the loss curvature and epsilon relative to sqrt(m1 * m2).
    bool data_scaled = false;

    void validate() const {
        if (!(phi0 > 0.0) || !std::isfinite(phi0)) throw InvalidInput("SolverConfig: phi0 must be positive");
        if (!(gamma > 1.0) || !std::isfinite(gamma)) throw InvalidInput("SolverConfig: gamma must exceed 1");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("SolverConfig: lambda must be nonnegative");
        if (!(epsilon > 0.0)) throw InvalidInput("SolverConfig: epsilon must be positive");
        if (max_iters < 1) throw InvalidInput("SolverConfig: max_iters must be at least 1");
        if (!(box_level > 0.0)) throw InvalidInput("SolverConfig: box level must be positive");
    }
};

struct SolveTrace {
    int iterations = 0;
    /// F(A^(0)), F(A^(1)), ... with F = L + lambda * ||.||_*
    std::vector<double> objective_values;
    double final_phi = 0.0;
    bool converged = false;
    int backtracks = 0;
};

struct SolveResult {
    Matrix solution;
    SolveTrace trace;
};

/// Q(A; B, phi) = L(B) + <grad L(B), A - B> + phi/2 ||A - B||_F^2
template <LossOracle Loss>
double majorizer(const Matrix& a, const Matrix& b, double phi, const Loss& loss) {
    require_same_shape(a, b, "majorizer");
    if (!(phi > 0.0)) throw InvalidInput("majorizer: phi must be positive");
    const Matrix diff = a - b;
    return loss.value(b) + loss.gradient(b).cwiseProduct(diff).sum() + 0.5 * phi * diff.squaredNorm();
}

/// L(A) = (1/n) sum_i (Y_i - (A + offset)[r_i, c_i])^2. The offset lets the
/// debiasing step optimise over the correction D while scoring D + A_tilde.
class SquaredLoss {
public:
    explicit SquaredLoss(const MaskedDataset& data, std::optional<Matrix> offset = std::nullopt)
        : rows_(data.rows), cols_(data.cols), offset_(std::move(offset)) {
        validate(data, "squared_loss_oracle");
        if (offset_) {
            if (offset_->rows() != rows_ || offset_->cols() != cols_)
                throw InvalidInput("squared_loss_oracle: offset shape mismatch");
        }
        n_ = static_cast<double>(data.obs.size());
        row_.reserve(data.obs.size());
        col_.reserve(data.obs.size());
        y_.reserve(data.obs.size());
        counts_ = Matrix::Zero(rows_, cols_);
        sums_ = Matrix::Zero(rows_, cols_);
        for (const auto& o : data.obs) {
            row_.push_back(o.row);
            col_.push_back(o.col);
            y_.push_back(o.value);
            counts_(o.row, o.col) += 1.0;
            sums_(o.row, o.col) += o.value;
        }
    }

    double value(const Matrix& a) const {
        check(a);
        double acc = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            double fitted = a(row_[i], col_[i]);
            if (offset_) fitted += (*offset_)(row_[i], col_[i]);
            const double r = y_[i] - fitted;
            acc += r * r;
        }
        return acc / n_;
    }

    /// (2/n) sum_i ((A + offset)[r_i, c_i] - Y_i) e_{r_i} e_{c_i}^T
    Matrix gradient(const Matrix& a) const {
        check(a);
        Matrix g;
        if (offset_)
            g = counts_.cwiseProduct(a + *offset_) - sums_;
        else
            g = counts_.cwiseProduct(a) - sums_;
        return (2.0 / n_) * g;
    }

    /// Largest curvature of L: 2 * (max samples per cell) / n.
    double curvature() const { return 2.0 * counts_.maxCoeff() / n_; }

    double sample_size() const { return n_; }

private:
    void check(const Matrix& a) const {
        if (a.rows() != rows_ || a.cols() != cols_) throw InvalidInput("squared loss: matrix shape mismatch");
    }

    std::int64_t rows_;
    std::int64_t cols_;
    std::optional<Matrix> offset_;
    double n_ = 0.0;
    std::vector<std::int64_t> row_;
    std::vector<std::int64_t> col_;
    std::vector<double> y_;
    Matrix counts_;
    Matrix sums_;
};

inline SquaredLoss squared_loss_oracle(const MaskedDataset& data) { return SquaredLoss(data); }

/// Estimator defaults: phi0 = 1e-3 x curvature, epsilon = 1e-5 x sqrt(m1 m2),
/// gamma = 2, at most 500 iterations.
inline SolverConfig default_solver_config() {
    SolverConfig cfg;
    cfg.phi0 = 1e-3;
    cfg.epsilon = 1e-5;
    cfg.data_scaled = true;
    return cfg;
}

/// Turns a data-scaled config into absolute values for this loss.
inline SolverConfig resolve_scaling(SolverConfig cfg, const SquaredLoss& loss, std::int64_t rows, std::int64_t cols) {
    if (cfg.data_scaled) {
        cfg.phi0 *= loss.curvature();
        cfg.epsilon *= std::sqrt(static_cast<double>(rows * cols));
        cfg.data_scaled = false;
    }
    return cfg;
}

namespace detail {

inline bool inside_box(const Matrix& a, double level, const std::optional<Matrix>& shift) {
    if (shift) return ((a + *shift).cwiseAbs().array() <= level).all();
    return (a.cwiseAbs().array() <= level).all();
}

}  // namespace detail

/// Runs the LAMM iteration from `init`. Each outer step proposes
/// project_box(Soft_{lambda/phi}(A - grad/phi)) and multiplies phi by gamma
/// until the quadratic majorizer dominates the loss at the proposal. phi is
/// warm-started at max(phi0, phi_prev / gamma).
template <LossOracle Loss>
SolveResult lamm_solve(const Loss& loss, const Matrix& init, const SolverConfig& cfg) {
    cfg.validate();
    require_finite(init, "lamm_solve");
    if (cfg.box_shift) require_same_shape(init, *cfg.box_shift, "lamm_solve");
    if (!detail::inside_box(init, cfg.box_level * (1.0 + 1e-12), cfg.box_shift))
        throw InvalidInput("lamm_solve: initial point violates the box constraint");

    const double phi_cap = cfg.phi0 * std::pow(cfg.gamma, 64);
    SolveResult res{init, {}};
    SolveTrace& tr = res.trace;

    Matrix current = init;
    double loss_current = loss.value(current);
    if (!std::isfinite(loss_current)) throw SolverDiverged("lamm_solve: non-finite loss at the initial point");
    tr.objective_values.push_back(loss_current + cfg.lambda * (cfg.lambda > 0.0 ? nuclear_norm(current) : 0.0));

    double phi = cfg.phi0;
    for (int k = 1; k <= cfg.max_iters; ++k) {
        if (k > 1) phi = std::max(cfg.phi0, phi / cfg.gamma);
        const Matrix grad = loss.gradient(current);

        Matrix candidate;
        double loss_candidate = 0.0;
        double nuclear_candidate = 0.0;
        const double objective_current = tr.objective_values.back();
        bool stalled = false;
        for (;;) {
            const SvdFactors f = svd(current - grad / phi);
            const double tau = cfg.lambda / phi;
            Matrix shrunk = soft_threshold(f, tau);
            candidate = project_box(shrunk, cfg.box_level, cfg.box_shift);
            if (cfg.lambda > 0.0) {
                if (candidate == shrunk)
                    nuclear_candidate = (f.sigma.array() - tau).cwiseMax(0.0).sum();
                else
                    nuclear_candidate = nuclear_norm(candidate);
            }
            loss_candidate = loss.value(candidate);
            if (!std::isfinite(loss_candidate)) throw SolverDiverged("lamm_solve: non-finite loss");

            const Matrix step = candidate - current;
            const double q = loss_current + grad.cwiseProduct(step).sum() + 0.5 * phi * step.squaredNorm();
            const double slack = 1e-12 * std::max(std::abs(loss_current), std::abs(loss_candidate));
            const bool majorized = q + slack >= loss_candidate;
            // Shrink-then-clip is not the exact constrained prox, so a
            // majorized step can still raise the objective when the box binds.
            const double objective_candidate = loss_candidate + cfg.lambda * nuclear_candidate;
            const bool descends = objective_candidate <= objective_current + 1e-12 * std::abs(objective_current);
            if (majorized && descends) break;

            phi *= cfg.gamma;
            ++tr.backtracks;
            if (phi > phi_cap) {
                if (!majorized) throw SolverDiverged("lamm_solve: quadratic parameter exceeded phi0 * gamma^64");
                stalled = true;  // no descent step left at any step size
                break;
            }
        }
        if (stalled) break;

        const double change = (candidate - current).norm();
        current = std::move(candidate);
        loss_current = loss_candidate;
        tr.objective_values.push_back(loss_current + cfg.lambda * nuclear_candidate);
        tr.iterations = k;
        if (change <= cfg.epsilon) {
            tr.converged = true;
            break;
        }
    }
    tr.final_phi = phi;
    res.solution = std::move(current);
    return res;
}

}  // namespace transmc
