#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "transmc/error.hpp"
#include "transmc/linalg.hpp"

namespace transmc {

struct Observation {
    std::int64_t row = 0;
    std::int64_t col = 0;
    double value = 0.0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Observed entries of one task. Task 0 is the target; 1..K are sources.
/// Repeated coordinates are separate samples.
struct MaskedDataset {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<Observation> obs;
    int task_id = 0;

    std::size_t size() const noexcept { return obs.size(); }
    bool empty() const noexcept { return obs.empty(); }
};

inline void validate(const MaskedDataset& d, const char* who) {
    if (d.rows < 1 || d.cols < 1) throw InvalidInput(std::string(who) + ": matrix dimensions must be positive");
    if (d.obs.empty()) throw InvalidInput(std::string(who) + ": empty dataset");
    for (const auto& o : d.obs) {
        if (o.row < 0 || o.row >= d.rows || o.col < 0 || o.col >= d.cols)
            throw InvalidInput(std::string(who) + ": coordinate (" + std::to_string(o.row) + ", " +
                               std::to_string(o.col) + ") out of bounds");
        if (!std::isfinite(o.value)) throw InvalidInput(std::string(who) + ": non-finite observation");
    }
}

/// Mean squared prediction error of `a` over the dataset's entries.
inline double mean_squared_error(const MaskedDataset& d, const Matrix& a) {
    if (d.obs.empty()) throw InvalidInput("mean_squared_error: empty dataset");
    double acc = 0.0;
    for (const auto& o : d.obs) {
        const double r = o.value - a(o.row, o.col);
        acc += r * r;
    }
    return acc / static_cast<double>(d.obs.size());
}

/// Concatenate datasets in the given order; all must share dimensions.
inline MaskedDataset concatenate(const std::vector<const MaskedDataset*>& parts, int task_id = 0) {
    if (parts.empty()) throw InvalidInput("concatenate: no datasets");
    MaskedDataset out{parts.front()->rows, parts.front()->cols, {}, task_id};
    std::size_t total = 0;
    for (const auto* p : parts) total += p->obs.size();
    out.obs.reserve(total);
    for (const auto* p : parts) {
        if (p->rows != out.rows || p->cols != out.cols)
            throw InvalidInput("concatenate: dimension mismatch across tasks");
        out.obs.insert(out.obs.end(), p->obs.begin(), p->obs.end());
    }
    return out;
}

}  // namespace transmc
