// transmc: simulate, fit, transfer, select, benchmark, evaluate.
//
// Relative paths resolve against $TRANSMC_WORKSPACE when it is set. Failures
// print one line "error: <kind>: <message>" to stderr and exit nonzero.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "transmc/benchmark.hpp"
#include "transmc/data_io.hpp"
#include "transmc/estimators.hpp"
#include "transmc/keyvalue.hpp"
#include "transmc/selection.hpp"
#include "transmc/simulation.hpp"

namespace fs = std::filesystem;
using namespace transmc;

namespace {

struct Options {
    std::string config;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<unsigned> jobs;

    std::string data;
    std::vector<std::string> manifests;
    std::optional<double> lambda;
    std::optional<double> box;
    std::vector<std::string> schemes;
    bool no_selection = false;
};

fs::path resolve(const std::string& p) {
    fs::path path(p);
    if (path.is_relative())
        if (const char* ws = std::getenv("TRANSMC_WORKSPACE"); ws && *ws) return fs::path(ws) / path;
    return path;
}

fs::path output_dir(const Options& o) {
    if (o.out.empty()) throw InvalidInput("--out is required");
    const fs::path dir = resolve(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + dir.string() + "'");
    return dir;
}

KeyValueFile load_config(const Options& o) {
    return o.config.empty() ? KeyValueFile{} : KeyValueFile::load(resolve(o.config).string());
}

ScenarioSpec scenario_from(const Options& o, const KeyValueFile& kv) {
    ScenarioSpec spec;
    if (!o.preset.empty()) spec = preset(o.preset);
    else if (kv.has("preset")) spec = preset(kv.get("preset"));
    else if (!o.config.empty()) spec = ScenarioSpec::from_keyvalue(kv);
    else throw InvalidInput("need --config or --preset");
    if (o.seed) spec.seed = *o.seed;
    spec.validate();
    return spec;
}

// Method settings start from the preset's tuned values (or the `settings`
// key, or `fallback`), then config keys and flags override them.
BenchmarkSettings settings_from(const Options& o, const KeyValueFile& kv, const std::string& fallback = "") {
    std::string name = o.preset;
    if (name.empty()) name = kv.get_or("preset", "");
    if (name.empty()) name = kv.get_or("settings", fallback);
    BenchmarkSettings s = preset_settings(name);
    s.apply(kv);
    if (o.reps) s.reps = *o.reps;
    if (o.jobs) s.jobs = *o.jobs;
    if (o.box) s.box = *o.box;
    s.validate();
    return s;
}

struct LoadedManifest {
    Manifest manifest;
    MaskedDataset target;
    std::vector<MaskedDataset> sources;
};

// Manifest entries are relative to the manifest's own directory.
LoadedManifest load_manifest(const std::string& path) {
    const fs::path p = resolve(path);
    LoadedManifest m{read_manifest(p.string()), {}, {}};
    m.manifest.validate();
    const fs::path dir = p.parent_path();
    auto locate = [&](const std::string& f) { return fs::path(f).is_absolute() ? fs::path(f) : dir / f; };
    m.target = read_dataset(locate(m.manifest.target).string(), 0);
    for (std::size_t k = 0; k < m.manifest.sources.size(); ++k)
        m.sources.push_back(read_dataset(locate(m.manifest.sources[k]).string(), static_cast<int>(k + 1)));
    return m;
}

double box_for(const Options& o, const KeyValueFile& kv, const std::vector<const MaskedDataset*>& data) {
    if (o.box) return *o.box;
    if (kv.has("box")) return kv.get_double("box");
    std::vector<MaskedDataset> copy;
    for (const auto* d : data) copy.push_back(*d);
    return frame_box(copy);
}

int cmd_simulate(const Options& o) {
    const KeyValueFile kv = load_config(o);
    const ScenarioSpec spec = scenario_from(o, kv);
    const fs::path dir = output_dir(o);
    const Scenario sc = make_scenario(spec);
    const ReplicateData d = draw_replicate(sc, 0);
    write_dataset(d.target, (dir / "target.txt").string());
    write_matrix(sc.target, (dir / "truth_target.txt").string());
    Manifest m;
    m.target = "target.txt";
    m.seed = spec.seed;
    for (std::size_t k = 0; k < d.sources.size(); ++k) {
        const std::string name = "source_" + std::to_string(k + 1) + ".txt";
        write_dataset(d.sources[k], (dir / name).string());
        write_matrix(sc.sources.matrices[k], (dir / ("truth_source_" + std::to_string(k + 1) + ".txt")).string());
        m.sources.push_back(name);
        m.offsets.push_back(static_cast<int>(k + 1));
    }
    write_manifest(m, (dir / "manifest.cfg").string());
    spec.to_keyvalue().save((dir / "scenario.cfg").string());
    std::cout << "wrote target and " << d.sources.size() << " sources to " << dir.string() << '\n';
    return 0;
}

int cmd_fit(const Options& o) {
    if (o.data.empty()) throw InvalidInput("--data is required");
    if (o.out.empty()) throw InvalidInput("--out is required");
    const KeyValueFile kv = load_config(o);
    const MaskedDataset d = read_dataset(resolve(o.data).string());
    const double box = box_for(o, kv, {&d});
    const SolverConfig cfg = settings_from(o, kv).solver;
    double lam = 0.0;
    if (o.lambda) {
        lam = *o.lambda;
    } else {
        const BenchmarkSettings s = settings_from(o, kv);
        const double v = std::isnan(s.transfer.v) ? pilot_noise_scale(d, box, cfg) : s.transfer.v;
        lam = theorem_penalty(s.transfer.c2, box, v, static_cast<double>(d.size()), d.rows, d.cols);
    }
    const Estimate est = fit_single(d, lam, box, cfg);
    const fs::path out = resolve(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_matrix(est.matrix, out.string());
    std::cout << "lambda " << format_real(lam) << " iterations " << est.trace.iterations << " converged "
              << (est.trace.converged ? "yes" : "no") << '\n';
    return 0;
}

KeyValueFile transfer_report(const TransferEstimate& t) {
    KeyValueFile r;
    r.set("lambda1", KeyValueFile::format(t.lambda1));
    r.set("lambda2", KeyValueFile::format(t.lambda2));
    r.set("noise_scale", KeyValueFile::format(t.noise_scale));
    r.set("pooled_iterations", std::to_string(t.pooled.trace.iterations));
    r.set("debias_iterations", std::to_string(t.correction.trace.iterations));
    r.set("converged", t.pooled.trace.converged && t.correction.trace.converged ? "yes" : "no");
    return r;
}

int cmd_transfer(const Options& o, bool select) {
    if (o.manifests.size() != 1) throw InvalidInput("exactly one --manifest is required");
    const KeyValueFile kv = load_config(o);
    const LoadedManifest m = load_manifest(o.manifests.front());
    std::vector<const MaskedDataset*> all{&m.target};
    for (const auto& s : m.sources) all.push_back(&s);
    const double box = box_for(o, kv, all);
    const BenchmarkSettings s = settings_from(o, kv);
    const fs::path dir = output_dir(o);
    const std::vector<const MaskedDataset*> sources(all.begin() + 1, all.end());
    if (!select) {
        const TransferEstimate t = trans_mc(m.target, sources, s.transfer, box, s.solver);
        write_matrix(t.combined.matrix, (dir / "estimate.txt").string());
        transfer_report(t).save((dir / "report.cfg").string());
        for (const auto& w : t.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << "lambda1 " << format_real(t.lambda1) << " lambda2 " << format_real(t.lambda2) << '\n';
        return 0;
    }
    SelectionConfig sel = s.selection;
    if (o.seed) sel.seed = *o.seed;
    const SelectiveTransferResult r = s_trans_mc(m.target, sources, sel, s.transfer, box, s.solver);
    write_matrix(r.estimate.combined.matrix, (dir / "estimate.txt").string());
    KeyValueFile rep = transfer_report(r.estimate);
    std::string picked;
    for (std::size_t i = 0; i < r.report.selected.size(); ++i)
        picked += (i ? ", " : "") + std::to_string(r.report.selected[i]);
    rep.set("selected", picked);
    rep.set("L0", KeyValueFile::format(r.report.L0));
    rep.set("sigma_hat", KeyValueFile::format(r.report.sigma_hat));
    rep.set("threshold", KeyValueFile::format(r.report.threshold));
    rep.set("source_losses", KeyValueFile::join(r.report.source_losses));
    rep.save((dir / "selection.cfg").string());
    std::cout << "selected {" << picked << "}\n";
    return 0;
}

int cmd_benchmark(const Options& o) {
    const KeyValueFile kv = load_config(o);
    const ScenarioSpec spec = scenario_from(o, kv);
    const BenchmarkSettings s = settings_from(o, kv);
    std::vector<SamplingKind> schemes;
    if (!o.schemes.empty())
        for (const auto& x : o.schemes) schemes.push_back(parse_sampling_kind(x));
    else if (kv.has("schemes"))
        for (const auto& x : kv.get_list("schemes")) schemes.push_back(parse_sampling_kind(x));
    else
        schemes.push_back(spec.sampling);
    const fs::path dir = output_dir(o);
    const BenchmarkReport r = run_benchmark(spec, s, schemes);
    std::ofstream summary(dir / "summary.csv", std::ios::binary);
    write_benchmark_csv(summary, r);
    std::ofstream curve(dir / "curve.csv", std::ios::binary);
    write_curve_csv(curve, r.curve);
    if (!summary || !curve) throw Error("cannot write benchmark output in '" + dir.string() + "'");
    for (const auto& f : r.failures) std::cerr << "warning: solver failure: " << f << '\n';
    std::cout << "replicates " << s.reps << " failed " << r.failed_reps << '\n';
    return 0;
}

// Synthetic frames from a `kind = frames` config: write every frame and one
// manifest per target, then score from those files.
std::vector<std::string> synthesize_frames(const KeyValueFile& kv, const Options& o, const fs::path& dir) {
    FrameSequenceSpec f;
    f.rows = kv.get_int_or("rows", f.rows);
    f.cols = kv.get_int_or("cols", f.cols);
    f.frames = kv.get_int_or("frames", f.frames);
    f.missing_fraction = kv.get_double_or("missing_fraction", f.missing_fraction);
    f.noise_sd = kv.get_double_or("noise_sd", f.noise_sd);
    f.harmonics = static_cast<int>(kv.get_int_or("harmonics", f.harmonics));
    f.rotation_period = kv.get_double_or("rotation_period", f.rotation_period);
    f.disturbance = kv.get_double_or("disturbance", f.disturbance);
    if (kv.has("seed")) f.seed = kv.get_u64("seed");
    if (o.seed) f.seed = *o.seed;
    const FrameSequence seq = make_frame_sequence(f);
    const int half_width = static_cast<int>(kv.get_int_or("half_width", 10));
    const double holdout = kv.get_double_or("holdout_fraction", 0.2);

    const fs::path frame_dir = dir / "frames";
    fs::create_directories(frame_dir);
    std::vector<std::string> names;
    for (std::size_t t = 0; t < seq.observed.size(); ++t) {
        const std::string id = "frame_" + std::to_string(t);
        write_frame(FrameFile{f.rows, f.cols, id, seq.observed[t].obs}, (frame_dir / (id + ".txt")).string());
        names.push_back(id + ".txt");
    }
    std::vector<std::size_t> targets;
    if (kv.has("targets"))
        for (const auto& x : kv.get_list("targets")) targets.push_back(static_cast<std::size_t>(std::stoul(x)));
    else
        for (std::size_t t = 0; t < names.size(); ++t) targets.push_back(t);
    std::vector<std::string> manifests;
    for (std::size_t t : targets) {
        Manifest m = window_sources(names, t, half_width, holdout, make_rng(f.seed, {t})());
        const std::string path = (frame_dir / ("manifest_" + std::to_string(t) + ".cfg")).string();
        write_manifest(m, path);
        manifests.push_back(path);
    }
    return manifests;
}

int cmd_evaluate(const Options& o) {
    const KeyValueFile kv = load_config(o);
    const fs::path dir = output_dir(o);
    std::vector<std::string> manifests = o.manifests;
    if (manifests.empty()) {
        if (kv.get_or("kind", "") != "frames") throw InvalidInput("evaluate needs --manifest or a 'kind = frames' config");
        manifests = synthesize_frames(kv, o, dir);
    }
    const BenchmarkSettings s = settings_from(o, kv, "frames");
    std::vector<LoadedManifest> loaded;
    for (const auto& m : manifests) loaded.push_back(load_manifest(m));
    std::vector<const MaskedDataset*> everything;
    for (const auto& m : loaded) {
        everything.push_back(&m.target);
        for (const auto& src : m.sources) everything.push_back(&src);
    }
    const double box = box_for(o, kv, everything);
    auto scores = run_replicates(loaded.size(), s.jobs, [&](std::size_t i) {
        const LoadedManifest& m = loaded[i];
        std::vector<const MaskedDataset*> sources;
        for (const auto& src : m.sources) sources.push_back(&src);
        FrameScores f = score_frame(m.target, sources, m.manifest.holdout_fraction, m.manifest.seed, s, box,
                                    !o.no_selection);
        f.frame = i;
        return f;
    });
    std::ofstream out(dir / "evaluation.csv", std::ios::binary);
    write_frame_scores_csv(out, scores);
    if (!out) throw Error("cannot write '" + (dir / "evaluation.csv").string() + "'");
    double single = 0.0, transfer = 0.0;
    for (const auto& f : scores) {
        single += f.single.re;
        transfer += f.transmc.re;
    }
    const double n = static_cast<double>(scores.size());
    std::cout << "frames " << scores.size() << " mean RE single " << format_real(single / n) << " transmc "
              << format_real(transfer / n) << '\n';
    return 0;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(const char* kind, const std::string& what, int code) {
    std::cerr << "error: " << kind << ": " << one_line(what) << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer-learning matrix completion"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "key = value config file");
    app.add_option("--preset", o.preset, "named scenario: paper-5.1[-small], paper-5.2[-small]");
    app.add_option("--out", o.out, "output directory (file for fit)");
    app.add_option("--seed", o.seed, "override the seed");
    app.add_option("--reps", o.reps, "replications")->check(CLI::PositiveNumber);
    app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "write one replicate of a scenario with its truth and manifest");
    auto* fit = app.add_subcommand("fit", "nuclear-norm fit of a single observation file");
    fit->add_option("--data", o.data, "observation file")->required();
    fit->add_option("--lambda", o.lambda, "penalty; default uses the c2 formula");
    auto* transfer = app.add_subcommand("transfer", "TransMC on a manifest's target and sources");
    auto* select = app.add_subcommand("select", "S-TransMC on a manifest's target and sources");
    auto* benchmark = app.add_subcommand("benchmark", "replicated comparison, summary and curve CSVs");
    benchmark->add_option("--scheme", o.schemes, "sampling scheme(s) to run");
    auto* evaluate = app.add_subcommand("evaluate", "holdout E/RE per frame");
    evaluate->add_flag("--no-selection", o.no_selection, "skip S-TransMC");
    for (auto* sub : {fit, transfer, select, evaluate}) sub->add_option("--box", o.box, "entry bound");
    for (auto* sub : {transfer, select, evaluate}) sub->add_option("--manifest", o.manifests, "manifest file");
    benchmark->add_option("--box", o.box, "entry bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*fit) return cmd_fit(o);
        if (*transfer) return cmd_transfer(o, false);
        if (*select) return cmd_transfer(o, true);
        if (*benchmark) return cmd_benchmark(o);
        if (*evaluate) return cmd_evaluate(o);
    } catch (const ParseError& e) {
        return fail("parse_error", e.what(), 4);
    } catch (const InvalidInput& e) {
        return fail("invalid_input", e.what(), 3);
    } catch (const SolverDiverged& e) {
        return fail("solver_diverged", e.what(), 5);
    } catch (const std::exception& e) {
        return fail("io_error", e.what(), 1);
    }
    return 1;
}
