// Benchmark of the data-parallel kernels against their serial references.
// Each kernel must produce bit-identical output under both policies; the
// comparison here doubles as a smoke check of that contract.

#include <chrono>
#include <cstdio>
#include <vector>

#include "ffl/analysis.hpp"
#include "ffl/device.hpp"
#include "ffl/nn.hpp"
#include "ffl/parallel.hpp"
#include "ffl/prng.hpp"
#include "ffl/sweep.hpp"

using namespace ffl;

namespace {

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_it(F&& fn, int iters) {
    const double t0 = now();
    for (int i = 0; i < iters; ++i) fn();
    return (now() - t0) / iters;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());

    // --- sweep evaluation ---------------------------------------------------
    {
        device::DeviceParams p;
        auto st = device::DeviceState::fresh(p);
        rf::SweepConfig cfg;
        cfg.n_points = 4001;  // dense grid so the kernel dominates
        rf::SweepResult rs, rp;
        const double ts = time_it([&] { rs = sweep::eval(st, p, cfg, ExecPolicy::Serial); }, 20);
        const double tp = time_it([&] { rp = sweep::eval(st, p, cfg, ExecPolicy::Parallel); }, 20);
        const bool same = rs.zc11 == rp.zc11 && rs.zc12 == rp.zc12 && rs.zc21 == rp.zc21 &&
                          rs.zc22 == rp.zc22 && rs.s21 == rp.s21 && rs.z12 == rp.z12;
        report("sweep eval (4001 pt)", ts, tp, same);
    }

    // --- readout gradient ------------------------------------------------------
    {
        SplitMix64 rng(99);
        std::vector<nn::Sample> samples(256);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            samples[i].label = static_cast<int>(i % 4);
            samples[i].target = samples[i].label / 3.0;
            for (auto& f : samples[i].features) f = rng.next_in(13000.0, 17000.0);
        }
        nn::TrainConfig cfg;
        cfg.epochs = 1;
        nn::ReadoutModel model;
        model.variant = nn::Variant::Full;
        model.norm.fit(samples);
        const auto layout = nn::Layout::of(model.variant);
        model.theta.assign(layout.total, 0.0);
        for (auto& t : model.theta) t = rng.next_in(-0.2, 0.2);
        model.bn_mean.fill(0.0);
        model.bn_var.fill(1.0);

        std::vector<double> gs(layout.total), gp(layout.total);
        double ls = 0, lp = 0;
        const double ts =
            time_it([&] { ls = nn::loss_and_grad(model, samples, gs, ExecPolicy::Serial); }, 20);
        const double tp =
            time_it([&] { lp = nn::loss_and_grad(model, samples, gp, ExecPolicy::Parallel); }, 20);
        report("readout gradient", ts, tp, ls == lp && gs == gp);
    }

    // --- divergence pair search ---------------------------------------------------
    {
        std::vector<double> series(20000);
        double x = 0.37;
        for (auto& v : series) {
            x = 3.99 * x * (1.0 - x);
            v = v == 0 ? x : x;  // logistic series
        }
        analysis::LyapunovConfig cfg;
        cfg.eps = 0.02;
        cfg.k_max = 12;
        analysis::DivergenceCurve cs, cp;
        const double ts =
            time_it([&] { cs = analysis::lyapunov_curve(series, cfg, ExecPolicy::Serial); }, 3);
        const double tp =
            time_it([&] { cp = analysis::lyapunov_curve(series, cfg, ExecPolicy::Parallel); }, 3);
        report("divergence pairs",
               ts, tp, cs.slope == cp.slope && cs.mean_ln_d == cp.mean_ln_d);
    }
    return 0;
}
