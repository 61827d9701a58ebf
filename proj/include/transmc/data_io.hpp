#pragma once

// Text formats.
//
// Frame / observation file:
//     m1 m2 label
//     row col value        (zero-based indices, one record per line)
// Frames reject repeated coordinates; observation files written from
// simulated data may repeat them (sampling is with replacement).
//
// Dense matrix file:
//     m1 m2
//     a_00 a_01 ... a_0(m2-1)
//     ...
//
// Manifest: key = value file naming a target frame, its ordered source
// frames and the holdout protocol. Paths are relative to the workspace root.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "transmc/dataset.hpp"
#include "transmc/error.hpp"
#include "transmc/keyvalue.hpp"
#include "transmc/linalg.hpp"
#include "transmc/random.hpp"

namespace transmc {

struct FrameFile {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::string frame_id;
    std::vector<Observation> records;

    void canonicalize() {
        std::sort(records.begin(), records.end(), [](const Observation& a, const Observation& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
    }

    MaskedDataset to_dataset(int task_id = 0) const { return {rows, cols, records, task_id}; }
};

inline std::string format_value(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline FrameFile parse_records(std::istream& in, bool allow_duplicates) {
    FrameFile f;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        if (!have_header) {
            std::string label;
            if (!(ls >> f.rows >> f.cols >> label)) throw ParseError("malformed header, expected 'm1 m2 label'", lineno);
            std::string extra;
            if (ls >> extra) throw ParseError("malformed header, trailing fields", lineno);
            if (f.rows < 1 || f.cols < 1) throw ParseError("matrix dimensions must be positive", lineno);
            f.frame_id = label;
            have_header = true;
            continue;
        }
        Observation o;
        std::string value;
        if (!(ls >> o.row >> o.col >> value)) throw ParseError("malformed record, expected 'row col value'", lineno);
        std::string extra;
        if (ls >> extra) throw ParseError("malformed record, trailing fields", lineno);
        try {
            std::size_t used = 0;
            o.value = std::stod(value, &used);
            if (used != value.size()) throw ParseError("malformed value '" + value + "'", lineno);
        } catch (const std::logic_error&) {
            throw ParseError("malformed value '" + value + "'", lineno);
        }
        if (!std::isfinite(o.value)) throw ParseError("non-finite value", lineno);
        if (o.row < 0 || o.row >= f.rows || o.col < 0 || o.col >= f.cols)
            throw ParseError("index (" + std::to_string(o.row) + ", " + std::to_string(o.col) + ") out of range", lineno);
        if (!allow_duplicates && !seen.insert({o.row, o.col}).second)
            throw ParseError("duplicate coordinate (" + std::to_string(o.row) + ", " + std::to_string(o.col) + ")",
                             lineno);
        f.records.push_back(o);
    }
    if (!have_header) throw ParseError("missing header", lineno == 0 ? 1 : lineno);
    return f;
}

inline void write_records(std::ostream& out, std::int64_t rows, std::int64_t cols, const std::string& label,
                          const std::vector<Observation>& records) {
    out << rows << ' ' << cols << ' ' << label << '\n';
    for (const auto& o : records) out << o.row << ' ' << o.col << ' ' << format_value(o.value) << '\n';
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

inline FrameFile parse_frame(std::istream& in) { return detail::parse_records(in, false); }

inline FrameFile read_frame(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_frame(in);
}

/// Writes records in canonical (row, col) order.
inline void write_frame(std::ostream& out, FrameFile frame) {
    if (frame.frame_id.empty() || frame.frame_id.find_first_of(" \t\n") != std::string::npos)
        throw InvalidInput("write_frame: frame id must be a single non-empty token");
    frame.canonicalize();
    detail::write_records(out, frame.rows, frame.cols, frame.frame_id, frame.records);
}

inline void write_frame(const FrameFile& frame, const std::string& path) {
    auto out = detail::open_out(path);
    write_frame(out, frame);
}

/// Observation files keep record order and allow repeated coordinates.
inline MaskedDataset read_dataset(const std::string& path, int task_id = 0) {
    auto in = detail::open_in(path);
    return detail::parse_records(in, true).to_dataset(task_id);
}

inline void write_dataset(const MaskedDataset& d, const std::string& path) {
    auto out = detail::open_out(path);
    detail::write_records(out, d.rows, d.cols, "task" + std::to_string(d.task_id), d.obs);
}

inline void write_matrix(std::ostream& out, const Matrix& a) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? " " : "") << format_value(a(i, j));
        out << '\n';
    }
}

inline void write_matrix(const Matrix& a, const std::string& path) {
    auto out = detail::open_out(path);
    write_matrix(out, a);
}

inline Matrix read_matrix(std::istream& in) {
    std::int64_t rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw ParseError("malformed matrix header", 1);
    Matrix a(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j)
            if (!(in >> a(i, j))) throw ParseError("truncated matrix body", static_cast<std::size_t>(i + 2));
    return a;
}

inline Matrix read_matrix(const std::string& path) {
    auto in = detail::open_in(path);
    return read_matrix(in);
}

struct HoldoutSplit {
    MaskedDataset train;
    MaskedDataset test;
};

/// Uniform random split; |test| = round(fraction * n), kept within [1, n - 1].
/// Both halves keep the input's record order.
inline HoldoutSplit holdout_split(const MaskedDataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("holdout_split: fraction must lie in (0, 1)");
    const std::size_t n = data.obs.size();
    if (n < 2) throw InvalidInput("holdout_split: need at least 2 observations");
    std::size_t n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = make_rng(seed, {0x486f6c64});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> in_test(n, 0);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = 1;

    HoldoutSplit s{{data.rows, data.cols, {}, data.task_id}, {data.rows, data.cols, {}, data.task_id}};
    s.train.obs.reserve(n - n_test);
    s.test.obs.reserve(n_test);
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? s.test : s.train).obs.push_back(data.obs[i]);
    return s;
}

inline HoldoutSplit holdout_split(const FrameFile& frame, double fraction, std::uint64_t seed) {
    return holdout_split(frame.to_dataset(0), fraction, seed);
}

struct Manifest {
    std::string target;
    std::vector<std::string> sources;
    std::vector<int> offsets;  // source position relative to the target, same order as sources
    double holdout_fraction = 0.2;
    std::uint64_t seed = 1;

    void validate() const {
        if (target.empty()) throw InvalidInput("manifest: missing target");
        if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
            throw InvalidInput("manifest: holdout fraction must lie in (0, 1)");
        if (!offsets.empty() && offsets.size() != sources.size())
            throw InvalidInput("manifest: offsets and sources differ in length");
    }

    KeyValueFile to_keyvalue() const {
        KeyValueFile kv;
        kv.set("target", target);
        std::string s, o;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            s += (i ? ", " : "") + sources[i];
            if (i < offsets.size()) o += (i ? ", " : "") + std::to_string(offsets[i]);
        }
        kv.set("sources", s);
        kv.set("offsets", o);
        kv.set("holdout_fraction", KeyValueFile::format(holdout_fraction));
        kv.set("seed", std::to_string(seed));
        return kv;
    }

    static Manifest from_keyvalue(const KeyValueFile& kv) {
        Manifest m;
        m.target = kv.get("target");
        m.sources = kv.has("sources") ? kv.get_list("sources") : std::vector<std::string>{};
        if (kv.has("offsets"))
            for (const auto& x : kv.get_list("offsets")) {
                try {
                    m.offsets.push_back(std::stoi(x));
                } catch (const std::logic_error&) {
                    throw ParseError("invalid offset '" + x + "'", 0);
                }
            }
        m.holdout_fraction = kv.get_double_or("holdout_fraction", m.holdout_fraction);
        if (kv.has("seed")) m.seed = kv.get_u64("seed");
        m.validate();
        return m;
    }
};

inline void write_manifest(const Manifest& m, const std::string& path) { m.to_keyvalue().save(path); }
inline Manifest read_manifest(const std::string& path) { return Manifest::from_keyvalue(KeyValueFile::load(path)); }

/// Sources are the frames at offsets -w..-1, +1..+w around index t, truncated
/// at the sequence ends.
inline Manifest window_sources(const std::vector<std::string>& frames, std::size_t t, int half_width = 10,
                               double holdout_fraction = 0.2, std::uint64_t seed = 1) {
    if (t >= frames.size()) throw InvalidInput("window_sources: target index out of range");
    if (half_width < 0) throw InvalidInput("window_sources: half width must be nonnegative");
    Manifest m;
    m.target = frames[t];
    m.holdout_fraction = holdout_fraction;
    m.seed = seed;
    const auto ti = static_cast<long long>(t);
    for (long long off = -half_width; off <= half_width; ++off) {
        if (off == 0) continue;
        const long long idx = ti + off;
        if (idx < 0 || idx >= static_cast<long long>(frames.size())) continue;
        m.sources.push_back(frames[static_cast<std::size_t>(idx)]);
        m.offsets.push_back(static_cast<int>(off));
    }
    return m;
}

}  // namespace transmc
