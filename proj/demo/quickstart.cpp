// Small end-to-end run: one target, five close sources and five distant
// ones. Compares the target-only fit, TransMC on every source and S-TransMC.

#include <cstdio>

#include "transmc/benchmark.hpp"

using namespace transmc;

int main() {
    ScenarioSpec spec = preset("paper-5.2-small");
    const Scenario sc = make_scenario(spec);
    const ReplicateData d = draw_replicate(sc, 0);
    const BenchmarkSettings s = preset_settings(spec.name);

    PenaltyPolicy pol = s.transfer;
    pol.v = spec.noise_sd;
    const double box = spec.a_cap;

    const double lam = theorem_penalty(pol.c2, box, pol.v, static_cast<double>(d.target.size()), spec.rows, spec.cols);
    const Estimate single = fit_single(d.target, lam, box, s.solver);
    const TransferEstimate all = trans_mc(d.target, d.sources, pol, box, s.solver);

    SelectionConfig sel = s.selection;
    sel.v = spec.noise_sd;
    const SelectiveTransferResult picked = s_trans_mc(d.target, d.sources, sel, pol, box, s.solver);

    std::printf("%zu x %zu target, %zu observed entries, %zu sources\n", static_cast<std::size_t>(spec.rows),
                static_cast<std::size_t>(spec.cols), d.target.size(), d.sources.size());
    std::printf("relative error  single %.4f  transmc %.4f  s-transmc %.4f\n", rel_frob_error(single.matrix, sc.target),
                rel_frob_error(all.combined.matrix, sc.target),
                rel_frob_error(picked.estimate.combined.matrix, sc.target));
    std::printf("selected sources:");
    for (int k : picked.report.selected) std::printf(" %d", k);
    std::printf("  (L0 %.4f, threshold %.4f)\n", picked.report.L0, picked.report.threshold);
    return 0;
}
