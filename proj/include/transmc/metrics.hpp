#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/error.hpp"
#include "transmc/linalg.hpp"

namespace transmc {

/// ||est - truth||_F / ||truth||_F
inline double rel_frob_error(const Matrix& est, const Matrix& truth) {
    require_same_shape(est, truth, "rel_frob_error");
    const double denom = truth.norm();
    if (denom == 0.0) throw InvalidInput("rel_frob_error: truth matrix is zero");
    return (est - truth).norm() / denom;
}

struct HoldoutErrors {
    double e = 0.0;   // sqrt(sum over test (A_hat - M)^2)
    double re = 0.0;  // e / sqrt(sum over test M^2)
};

inline HoldoutErrors holdout_errors(const Matrix& est, const MaskedDataset& test) {
    if (test.obs.empty()) throw InvalidInput("holdout_errors: empty test set");
    if (est.rows() != test.rows || est.cols() != test.cols) throw InvalidInput("holdout_errors: shape mismatch");
    double err = 0.0;
    double mass = 0.0;
    for (const auto& o : test.obs) {
        const double r = est(o.row, o.col) - o.value;
        err += r * r;
        mass += o.value * o.value;
    }
    if (mass == 0.0) throw InvalidInput("holdout_errors: all test values are zero, relative error undefined");
    HoldoutErrors h;
    h.e = std::sqrt(err);
    h.re = h.e / std::sqrt(mass);
    return h;
}

struct RepSummary {
    std::vector<double> errors;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    double sd = 0.0;  // sample SD, n - 1 denominator; 0 for one value

    double standard_error() const {
        return errors.empty() ? 0.0 : sd / std::sqrt(static_cast<double>(errors.size()));
    }
};

inline RepSummary summarize(std::vector<double> errors) {
    if (errors.empty()) throw InvalidInput("summarize: empty sequence");
    RepSummary s;
    s.errors = errors;
    const double n = static_cast<double>(errors.size());
    double sum = 0.0;
    for (double x : errors) sum += x;
    s.mean = sum / n;
    double ss = 0.0;
    for (double x : errors) ss += (x - s.mean) * (x - s.mean);
    s.sd = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(errors.begin(), errors.end());
    s.min = errors.front();
    s.max = errors.back();
    const std::size_t mid = errors.size() / 2;
    s.median = errors.size() % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
    return s;
}

inline void write_summary_header(std::ostream& out) { out << "method,scheme,mean,median,min,max,sd\n"; }

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline void write_summary_row(std::ostream& out, const std::string& method, const std::string& scheme,
                              const RepSummary& s) {
    out << method << ',' << scheme << ',' << format_real(s.mean) << ',' << format_real(s.median) << ','
        << format_real(s.min) << ',' << format_real(s.max) << ',' << format_real(s.sd) << '\n';
}

}  // namespace transmc
