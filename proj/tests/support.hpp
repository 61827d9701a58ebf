#pragma once

// Generators and independent reference implementations for the test suites.
// The references avoid the library's SVD path: singular values come from the
// eigenvalues of A^T A, shrinkage from the matching eigenvectors.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/linalg.hpp"
#include "transmc/random.hpp"

namespace testsupport {

using transmc::Matrix;
using transmc::MaskedDataset;
using transmc::Rng;
using transmc::Vector;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
    std::normal_distribution<double> n01(0.0, sd);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
    return m;
}

inline Matrix low_rank(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, Rng& rng) {
    return gaussian(rows, rank, rng) * gaussian(rank, cols, rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// n uniform draws with replacement from `truth` plus N(0, sd^2) noise.
inline MaskedDataset sample(const Matrix& truth, std::size_t n, double sd, Rng& rng, int task_id = 0) {
    std::uniform_int_distribution<std::int64_t> r(0, truth.rows() - 1), c(0, truth.cols() - 1);
    std::normal_distribution<double> noise(0.0, sd);
    MaskedDataset d{truth.rows(), truth.cols(), {}, task_id};
    for (std::size_t i = 0; i < n; ++i) {
        const auto rr = r(rng), cc = c(rng);
        d.obs.push_back({rr, cc, truth(rr, cc) + noise(rng)});
    }
    return d;
}

/// `count` distinct cells of `truth`, each observed once with N(0, sd^2) noise.
inline MaskedDataset sample_cells(const Matrix& truth, std::size_t count, double sd, Rng& rng) {
    std::vector<std::int64_t> cells(static_cast<std::size_t>(truth.size()));
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    std::normal_distribution<double> noise(0.0, sd);
    MaskedDataset d{truth.rows(), truth.cols(), {}, 0};
    for (std::size_t i = 0; i < count; ++i) {
        const std::int64_t r = cells[i] / truth.cols(), c = cells[i] % truth.cols();
        d.obs.push_back({r, c, truth(r, c) + noise(rng)});
    }
    return d;
}

/// Singular values, descending, from the spectrum of A^T A (or A A^T).
inline Vector gram_singular_values(const Matrix& a) {
    const bool tall = a.rows() >= a.cols();
    const Matrix g = tall ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

/// Soft-thresholded A through the eigendecomposition A^T A = V S^2 V^T:
/// U max(S - t, 0) V^T = A V diag(max(s - t, 0) / s) V^T.
inline Matrix gram_soft_threshold(const Matrix& a, double t) {
    if (a.rows() < a.cols()) return gram_soft_threshold(a.transpose(), t).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
    const Matrix& v = es.eigenvectors();
    Vector scale(v.cols());
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
        const double s = std::sqrt(std::max(es.eigenvalues()(i), 0.0));
        scale(i) = s > t ? (s - t) / s : 0.0;
    }
    return a * v * scale.asDiagonal() * v.transpose();
}

/// Naive loop versions of the squared loss and its gradient.
inline double naive_loss(const MaskedDataset& d, const Matrix& a) {
    double acc = 0.0;
    for (const auto& o : d.obs) acc += (o.value - a(o.row, o.col)) * (o.value - a(o.row, o.col));
    return acc / static_cast<double>(d.obs.size());
}

inline Matrix naive_gradient(const MaskedDataset& d, const Matrix& a) {
    Matrix g = Matrix::Zero(a.rows(), a.cols());
    for (const auto& o : d.obs) g(o.row, o.col) += 2.0 * (a(o.row, o.col) - o.value);
    return g / static_cast<double>(d.obs.size());
}

/// Fixed-step proximal gradient on (1/n) sum (Y - A)^2 + lambda ||A||_*,
/// step 1 / L with L = 2 max(count) / n, no box constraint.
inline Matrix prox_gradient_oracle(const MaskedDataset& d, double lambda, int iterations) {
    Matrix counts = Matrix::Zero(d.rows, d.cols);
    for (const auto& o : d.obs) counts(o.row, o.col) += 1.0;
    const double lip = 2.0 * counts.maxCoeff() / static_cast<double>(d.obs.size());
    Matrix a = Matrix::Zero(d.rows, d.cols);
    for (int k = 0; k < iterations; ++k) a = gram_soft_threshold(a - naive_gradient(d, a) / lip, lambda / lip);
    return a;
}

inline double nuclear(const Matrix& a) { return gram_singular_values(a).sum(); }

}  // namespace testsupport
