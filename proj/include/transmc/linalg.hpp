#pragma once

// Dense linear-algebra primitives: thin SVD with a fixed sign convention,
// matrix norms, singular value soft-thresholding and the projections used
// by the estimators.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>

#include "transmc/error.hpp"

namespace transmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin SVD factors, q = min(rows, cols).
struct SvdFactors {
    Matrix u;       // rows x q, orthonormal columns
    Vector sigma;   // q, nonincreasing, >= 0
    Matrix v;       // cols x q, orthonormal columns

    Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

struct NormSet {
    double frobenius = 0.0;
    double nuclear = 0.0;
    double spectral = 0.0;
    double max_abs_entry = 0.0;
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const char* who) {
    if (a.size() == 0) throw InvalidInput(std::string(who) + ": empty matrix");
    if (!a.allFinite()) throw InvalidInput(std::string(who) + ": non-finite entry");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(who) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()) + ")");
}

/// Thin SVD. Each column of U is flipped (together with the matching column
/// of V) so that its largest-magnitude entry is nonnegative; ties go to the
/// lowest row index.
inline SvdFactors svd(const Matrix& a) {
    require_finite(a, "svd");
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
    for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
        Eigen::Index arg = 0;
        f.u.col(j).cwiseAbs().maxCoeff(&arg);
        if (f.u(arg, j) < 0.0) {
            f.u.col(j) *= -1.0;
            f.v.col(j) *= -1.0;
        }
    }
    return f;
}

inline Vector singular_values(const Matrix& a) {
    require_finite(a, "singular_values");
    return Eigen::BDCSVD<Matrix>(a).singularValues();
}

inline NormSet norms_from_sigma(const Matrix& a, const Vector& sigma) {
    NormSet n;
    n.frobenius = a.norm();
    n.nuclear = sigma.sum();
    n.spectral = sigma.size() ? sigma(0) : 0.0;
    n.max_abs_entry = a.cwiseAbs().maxCoeff();
    return n;
}

/// All four norms from a single SVD.
inline NormSet norms(const Matrix& a) { return norms_from_sigma(a, singular_values(a)); }

inline double nuclear_norm(const Matrix& a) { return singular_values(a).sum(); }

/// Number of singular values above rel_tol * sigma_1 (zero for the zero matrix).
inline Eigen::Index numerical_rank(const Vector& sigma, double rel_tol = 1e-8) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double cut = rel_tol * sigma(0);
    return static_cast<Eigen::Index>((sigma.array() > cut).count());
}

inline Eigen::Index numerical_rank(const Matrix& a, double rel_tol = 1e-8) {
    return numerical_rank(singular_values(a), rel_tol);
}

/// sqrt(sum a_ij^2 P_ij) for a probability matrix P.
inline double weighted_frobenius(const Matrix& a, const Matrix& probs) {
    require_finite(a, "weighted_frobenius");
    require_same_shape(a, probs, "weighted_frobenius");
    if ((probs.array() < 0.0).any()) throw InvalidInput("weighted_frobenius: negative probability");
    if (std::abs(probs.sum() - 1.0) > 1e-8) throw InvalidInput("weighted_frobenius: probabilities do not sum to 1");
    return std::sqrt((a.array().square() * probs.array()).sum());
}

/// Singular value soft-thresholding, the proximal map of lambda * nuclear norm.
inline Matrix soft_threshold(const SvdFactors& f, double lambda) {
    if (!(lambda >= 0.0)) throw InvalidInput("soft_threshold: lambda must be nonnegative");
    Eigen::Index keep = 0;
    while (keep < f.sigma.size() && f.sigma(keep) > lambda) ++keep;
    Matrix out = Matrix::Zero(f.u.rows(), f.v.rows());
    if (keep == 0) return out;
    const Vector shrunk = (f.sigma.head(keep).array() - lambda).matrix();
    out.noalias() = f.u.leftCols(keep) * shrunk.asDiagonal() * f.v.leftCols(keep).transpose();
    return out;
}

inline Matrix soft_threshold(const Matrix& a, double lambda) {
    if (!(lambda >= 0.0)) throw InvalidInput("soft_threshold: lambda must be nonnegative");
    if (lambda == 0.0) {
        require_finite(a, "soft_threshold");
        return a;
    }
    return soft_threshold(svd(a), lambda);
}

/// Entrywise clamp so that |A + shift| <= level.
inline Matrix project_box(const Matrix& a, double level, const std::optional<Matrix>& shift = std::nullopt) {
    if (!(level > 0.0)) throw InvalidInput("project_box: level must be positive");
    if (!shift) return a.cwiseMax(-level).cwiseMin(level);
    require_same_shape(a, *shift, "project_box");
    Matrix out(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double s = (*shift)(i, j);
            out(i, j) = std::clamp(a(i, j), -level - s, level - s);
        }
    return out;
}

struct RowColProjection {
    Matrix onto;        // P_A(B) = U U^T B V V^T
    Matrix orthogonal;  // B - P_A(B)
};

/// Projection of B onto the row/column spaces of A; singular directions of A
/// below 1e-8 * sigma_1 are treated as absent.
inline RowColProjection project_rowcol(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "project_rowcol");
    require_finite(b, "project_rowcol");
    const SvdFactors f = svd(a);
    const Eigen::Index r = numerical_rank(f.sigma);
    RowColProjection p;
    if (r == 0) {
        p.onto = Matrix::Zero(b.rows(), b.cols());
    } else {
        const auto u = f.u.leftCols(r);
        const auto v = f.v.leftCols(r);
        p.onto = u * (u.transpose() * b * v) * v.transpose();
    }
    p.orthogonal = b - p.onto;
    return p;
}

}  // namespace transmc
