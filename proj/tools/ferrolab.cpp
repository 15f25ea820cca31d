// ferrolab - command-line front end for the virtual colloid laboratory:
// run experiment scripts, reproduce the canned experiments, calibrate the
// device map, drive the reservoir pipeline, and analyze logged sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ffl/analysis.hpp"
#include "ffl/calibrate.hpp"
#include "ffl/control.hpp"
#include "ffl/csv.hpp"
#include "ffl/digits.hpp"
#include "ffl/errors.hpp"
#include "ffl/experiments.hpp"
#include "ffl/interpreter.hpp"
#include "ffl/nn.hpp"
#include "ffl/prc.hpp"
#include "ffl/script.hpp"
#include "ffl/svg.hpp"
#include "ffl/testbench.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ffl;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string config_path;
    bool plot = false;
    int threads = 0;
    bool serial = false;
};

std::string default_out_dir() {
    if (const char* env = std::getenv("FERROLAB_OUT")) return env;
    return "out";
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "Deterministic run seed")->capture_default_str();
    cmd->add_option("--out", o.out_dir, "Output directory (default: FERROLAB_OUT or ./out)");
    cmd->add_option("--config", o.config_path, "Device parameter file");
    cmd->add_flag("--plot", o.plot, "Also write vector line charts");
    cmd->add_option("--threads", o.threads, "OpenMP thread cap (0 = library default)");
    cmd->add_flag("--serial", o.serial, "Force the serial kernels");
}

struct Run {
    CommonOpts opts;
    fs::path out;
    ordered_json manifest;
    device::DeviceParams params;
    ExecPolicy policy = ExecPolicy::Parallel;

    void begin(const std::string& command) {
        if (opts.threads > 0) set_threads(opts.threads);
        policy = opts.serial ? ExecPolicy::Serial : ExecPolicy::Parallel;
        out = opts.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(opts.out_dir);
        fs::create_directories(out);

        params = device::DeviceParams::defaults();
        if (!opts.config_path.empty()) {
            std::ifstream in(opts.config_path);
            if (!in) throw std::runtime_error("cannot open config: " + opts.config_path);
            std::vector<std::string> notices;
            params = device::load_params(in, notices);
            for (const auto& n : notices) std::cerr << "config: " << n << "\n";
        }
        params.seed = opts.seed;

        manifest = ordered_json{{"tool", "ferrolab"},
                                {"version", kVersion},
                                {"command", command},
                                {"seed", opts.seed},
                                {"config", opts.config_path},
                                {"out", out.string()},
                                {"sim_time_start_s", 0.0},
                                {"sim_time_end_s", nullptr},
                                {"outputs", ordered_json::array()}};
        write_manifest();
    }

    void write_manifest() {
        std::ofstream f(out / "manifest.json");
        f << manifest.dump(2) << "\n";
    }

    fs::path output_file(const std::string& name) {
        manifest["outputs"].push_back(name);
        return out / name;
    }

    void finish(double sim_end) {
        manifest["sim_time_end_s"] = sim_end;
        write_manifest();
    }

    bench::Testbench make_bench(bench::BenchTiming timing = {}) {
        return bench::Testbench(params, rf::SweepConfig{}, timing, policy);
    }
};

void export_log(Run& run, const bench::Testbench& tb, const std::string& name = "log.csv") {
    std::ofstream f(run.output_file(name));
    tb.export_log_csv(f);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The instruments CSV format written by export_log_csv.
struct LogTable {
    std::vector<double> t, bias, zc11, zc12, zc21, zc22;
    std::vector<double>& column(const std::string& name) {
        if (name == "t_s") return t;
        if (name == "bias_v") return bias;
        if (name == "zc11") return zc11;
        if (name == "zc12") return zc12;
        if (name == "zc21") return zc21;
        if (name == "zc22") return zc22;
        throw std::runtime_error("unknown column: " + name);
    }
};

LogTable read_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t_s,bias_v,zc11", 0) != 0)
        throw std::runtime_error("not an instruments log: " + path);
    LogTable tab;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v[6];
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3],
                        &v[4], &v[5]) != 6)
            throw std::runtime_error("bad log row: " + line);
        tab.t.push_back(v[0]);
        tab.bias.push_back(v[1]);
        tab.zc11.push_back(v[2]);
        tab.zc12.push_back(v[3]);
        tab.zc21.push_back(v[4]);
        tab.zc22.push_back(v[5]);
    }
    return tab;
}

const digits::DigitSet& dataset() {
    static const digits::DigitSet ds = [] {
        if (const char* dir = std::getenv("FFL_DATA_DIR")) {
            const fs::path p = fs::path(dir) / "digits8x8.txt";
            if (fs::exists(p)) return digits::DigitSet::load_file(p.string());
        }
        return digits::DigitSet::builtin();
    }();
    return ds;
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& path) {
    const auto text = read_file(path);
    try {
        const auto program = script::parse(text);
        const auto diags = script::check(program);
        for (const auto& d : diags.items) {
            std::cout << (d.severity == script::Diagnostic::Severity::Error ? "error" : "warning")
                      << " [" << d.code << "] line " << d.pos.line << ", col " << d.pos.col
                      << ": " << d.message << "\n";
        }
        std::cout << diags.error_count() << " errors\n";
        return diags.ok() ? 0 : 2;
    } catch (const script::UnknownCharacter& e) {
        std::cout << "error [unknown-character] " << e.what() << "\n1 errors\n";
        return 2;
    } catch (const script::SyntaxError& e) {
        std::cout << "error [syntax] " << e.what() << "\n1 errors\n";
        return 2;
    }
}

int cmd_run(Run& run, const std::string& path) {
    const auto program = script::parse(read_file(path));
    const auto diags = script::check(program);
    if (!diags.ok()) {
        for (const auto& d : diags.items)
            if (d.severity == script::Diagnostic::Severity::Error)
                std::cerr << "error [" << d.code << "] line " << d.pos.line << ": " << d.message
                          << "\n";
        throw std::runtime_error("script has " + std::to_string(diags.error_count()) +
                                 " check errors");
    }
    auto tb = run.make_bench();
    std::ofstream save_csv(run.output_file("save.csv"));
    script::CsvSink sink(save_csv);
    script::run(program, tb, sink);
    export_log(run, tb);
    run.finish(tb.clock());
    std::cout << "script complete: " << tb.log().size() << " measurements, t = "
              << csv::fixed(tb.clock(), 1) << " s\n";
    return 0;
}

void plot_log(Run& run, const bench::Testbench& tb, const std::string& name) {
    std::vector<double> t, zc11, zc22;
    for (const auto& r : tb.log()) {
        t.push_back(r.t);
        zc11.push_back(r.zc11);
        zc22.push_back(r.zc22);
    }
    svg::LinePlot plot(name, "t (s)", "indicator (ohm)");
    plot.add_series("zc11", t, zc11);
    plot.add_series("zc22", std::move(t), std::move(zc22));
    plot.write_file(run.output_file(name + ".svg").string());
}

int cmd_experiment(Run& run, const std::string& name, int loops, int levels, int iterations,
                   int weighted, int reps, int cycles, double offset_k) {
    auto tb = run.make_bench();
    const auto& ds = dataset();

    if (name == "hysteresis") {
        experiments::HysteresisConfig cfg;
        cfg.loops = loops;
        const auto res = experiments::hysteresis_sweep(tb, cfg);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "loop,area_zc22,pinch_v,range_zc22\n";
        std::vector<double> volts, zc11, zc22;
        for (std::size_t i = res.log_begin;
             i < res.log_begin + res.samples_per_loop * static_cast<std::size_t>(res.loops); ++i) {
            volts.push_back(tb.log()[i].bias);
            zc11.push_back(tb.log()[i].zc11);
            zc22.push_back(tb.log()[i].zc22);
        }
        const auto m11 = analysis::hysteresis_metrics(volts, zc11, res.loops);
        const auto m22 = analysis::hysteresis_metrics(volts, zc22, res.loops);
        for (int l = 0; l < res.loops; ++l) {
            sum << l << ',' << csv::fixed(std::abs(m22[l].area), 3) << ','
                << (m11[l].has_pinch ? csv::fixed(m11[l].pinch_voltage, 4) : "nan") << ','
                << csv::fixed(m22[l].dynamic_range, 3) << '\n';
        }
        if (run.opts.plot) plot_log(run, tb, "hysteresis");
    } else if (name == "memory") {
        experiments::MemoryConfig cfg;
        cfg.n_levels = levels;
        const auto recs = experiments::memory_store(tb, cfg);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "level,t_p_s,zc22_baseline,hold_mean,hold_var,delta\n";
        for (const auto& r : recs)
            sum << r.level << ',' << csv::fixed(r.t_p, 1) << ','
                << csv::fixed(r.zc22_baseline, 3) << ',' << csv::fixed(r.hold_mean, 3) << ','
                << csv::fixed(r.hold_var, 5) << ',' << csv::fixed(r.delta, 3) << '\n';
        if (run.opts.plot) plot_log(run, tb, "memory");
    } else if (name == "pulse-memory") {
        experiments::PulseMemoryConfig cfg;
        const auto recs = experiments::pulse_memory(tb, cfg);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "count,zc22_baseline,hold_mean,delta\n";
        for (const auto& r : recs)
            sum << r.count << ',' << csv::fixed(r.zc22_baseline, 3) << ','
                << csv::fixed(r.hold_mean, 3) << ',' << csv::fixed(r.delta, 3) << '\n';
        if (run.opts.plot) plot_log(run, tb, "pulse-memory");
    } else if (name == "differentiation") {
        const auto finals = experiments::differentiation_run(tb, ds);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "digit,final_zc22\n";
        for (int d = 0; d < 10; ++d)
            sum << d << ',' << csv::fixed(finals[static_cast<std::size_t>(d)], 3) << '\n';
        if (run.opts.plot) plot_log(run, tb, "differentiation");
    } else if (name == "classify") {
        const auto res = experiments::classify_inmemory(tb, ds, weighted);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "digit,final_zc22\n";
        for (int d = 0; d < 10; ++d)
            sum << d << ',' << csv::fixed(res.finals[static_cast<std::size_t>(d)], 3) << '\n';
        sum << "detected," << res.argmin << '\n';
        std::cout << "weighted " << weighted << " -> detected " << res.argmin << "\n";
        if (run.opts.plot) plot_log(run, tb, "classify");
    } else if (name == "adaptation") {
        experiments::AdaptationConfig cfg;
        cfg.reps = reps;
        cfg.weighted_digit = weighted;
        if (offset_k < 0) cfg.k = offset_k;
        const auto res = experiments::progressive_adaptation(tb, ds, cfg);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "digit,zc11_dynamic_range\n";
        for (int d = 0; d < 10; ++d)
            sum << d << ',' << csv::fixed(res.dynamic_range[static_cast<std::size_t>(d)], 3)
                << '\n';
        sum << "max_range_digit," << res.max_range_digit << '\n';
        if (run.opts.plot) plot_log(run, tb, "adaptation");
    } else if (name == "dynamics-reduction") {
        const auto res = experiments::dynamics_reduction_run(tb, ds, weighted, iterations);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "iteration,detected,threshold,range\n";
        for (std::size_t i = 0; i < res.iterations.size(); ++i) {
            const auto& it = res.iterations[i];
            sum << i << ',' << it.detected << ',' << csv::fixed(it.threshold, 3) << ','
                << csv::fixed(it.range, 3) << '\n';
        }
        sum << "accuracy," << csv::fixed(res.accuracy, 4) << '\n';
        std::cout << "accuracy " << csv::fixed(res.accuracy, 4) << ", final range "
                  << csv::fixed(res.iterations.back().range, 1) << " ohm\n";
        if (run.opts.plot) plot_log(run, tb, "dynamics-reduction");
    } else if (name == "chaos-probe") {
        experiments::ChaosProbeConfig cfg;
        cfg.cycles = cycles;
        const auto res = experiments::chaos_probe(tb, cfg);
        std::ofstream sum(run.output_file("summary.csv"));
        sum << "leg,ticks\n";
        for (std::size_t i = 0; i < res.leg_ticks.size(); ++i)
            sum << i << ',' << res.leg_ticks[i] << '\n';
        if (run.opts.plot) plot_log(run, tb, "chaos-probe");
    } else {
        throw CLI::ValidationError("experiment", "unknown experiment: " + name);
    }

    export_log(run, tb);
    run.finish(tb.clock());
    std::cout << "experiment " << name << " complete: " << tb.log().size()
              << " measurements\n";
    return 0;
}

int cmd_calibrate(Run& run) {
    const auto fitted = calibrate::fit(run.params);
    std::ofstream f(run.output_file("params.ffp"));
    device::save_params(f, fitted);
    const auto probe = calibrate::probe(fitted.w_eq, 0.0, fitted, rf::SweepConfig{});
    std::cout << "calibrated: zc11(w_eq) = " << csv::fixed(probe.zc11, 1)
              << " ohm, zc22(w_eq) = " << csv::fixed(probe.zc22, 1) << " ohm\n";
    run.finish(0.0);
    return 0;
}

int cmd_prc_collect(Run& run, int reps) {
    bench::BenchTiming fast{0.1, 0.05};  // tighter VNA timing for the long session
    auto tb = run.make_bench(fast);
    prc::CollectConfig cfg;
    cfg.reps = reps;
    const auto res = prc::collect_dataset(tb, dataset(), cfg);
    for (const auto& s : res.skipped) std::cerr << "skipped: " << s << "\n";

    std::ofstream f(run.output_file("dataset.csv"));
    f << "label";
    for (int i = 0; i < 64; ++i) f << ",f" << i;
    f << "\n";
    for (const auto& s : res.samples) {
        f << s.label;
        for (double v : s.features) f << ',' << csv::fixed(v, 6);
        f << "\n";
    }
    export_log(run, tb);
    run.finish(tb.clock());
    std::cout << "collected " << res.samples.size() << " samples ("
              << res.skipped.size() << " skipped)\n";
    return 0;
}

std::vector<nn::Sample> load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<nn::Sample> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nn::Sample s;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        s.label = std::stoi(cell);
        s.target = s.label / 3.0;
        for (auto& fv : s.features) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("short dataset row");
            fv = std::stod(cell);
        }
        samples.push_back(s);
    }
    return samples;
}

int cmd_prc_train(Run& run, const std::string& data_path, int epochs, double lr,
                  const std::string& variant_name) {
    nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.seed = run.opts.seed;
    cfg.policy = run.policy;
    if (variant_name == "full") cfg.variant = nn::Variant::Full;
    else if (variant_name == "single") cfg.variant = nn::Variant::SingleLayer;
    else if (variant_name == "two-layer") cfg.variant = nn::Variant::TwoLayer41;
    else throw CLI::ValidationError("--variant", "unknown variant: " + variant_name);

    const auto samples = load_dataset_csv(data_path);
    const auto model = nn::train(samples, cfg);
    model.save_file(run.output_file("model.bin").string());
    std::cout << "trained " << variant_name << ": loss = " << model.metrics.final_loss
              << ", rmse = " << model.metrics.rmse << " (" << epochs << " epochs)\n";
    run.finish(0.0);
    return 0;
}

int cmd_prc_serve(Run& run, const std::string& model_path, int port, double duration) {
    if (!fs::exists(model_path)) throw ModelNotFound(model_path);
    auto model = nn::ReadoutModel::load_file(model_path);
    prc::InferenceService service(std::move(model), static_cast<std::uint16_t>(port));
    std::cout << "serving on 127.0.0.1:" << service.port()
              << (duration > 0 ? " for " + csv::fixed(duration, 1) + " s" : "") << std::endl;
    if (duration > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(duration));
    } else {
        // until interrupted
        while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
    }
    service.stop();
    const auto results = service.results();
    std::ofstream f(run.output_file("results.csv"));
    f << "seq,true_label,predicted,score\n";
    for (const auto& r : results)
        f << r.seq << ',' << int(r.true_label) << ',' << r.predicted << ','
          << csv::fixed(r.score, 6) << "\n";
    std::cout << "served " << results.size() << " packets, "
              << service.malformed_count() << " malformed\n";
    run.finish(0.0);
    return 0;
}

int cmd_prc_stream(Run& run, const std::string& host, int port, int reps) {
    bench::BenchTiming fast{0.1, 0.05};
    auto tb = run.make_bench(fast);
    std::vector<int> seq;
    for (int r = 0; r < reps; ++r)
        for (int d = 0; d < 4; ++d) seq.push_back(d);
    const auto report = prc::stream_digits(tb, dataset(), seq, host,
                                           static_cast<std::uint16_t>(port), {});
    std::ofstream f(run.output_file("stream.csv"));
    f << "seq,true_digit,predicted,score\n";
    int correct = 0, answered = 0;
    for (const auto& o : report.outcomes) {
        f << o.seq << ',' << o.true_digit << ',' << o.predicted << ','
          << csv::fixed(o.score, 6) << "\n";
        if (o.predicted >= 0) {
            ++answered;
            correct += o.predicted == o.true_digit;
        }
    }
    export_log(run, tb);
    run.finish(tb.clock());
    std::cout << "streamed " << report.sent << " digits, " << report.replies << " replies, "
              << correct << " correct\n";
    return answered == 0 ? 2 : 0;
}

int cmd_analyze(Run& run, const std::string& tool, const std::string& input,
                const std::string& column, double eps, int k_max, int samples_per_loop) {
    auto tab = read_log_csv(input);
    if (tool == "lyapunov") {
        analysis::LyapunovConfig cfg;
        cfg.eps = eps;
        cfg.k_max = k_max;
        const auto curve = analysis::lyapunov_curve(tab.column(column), cfg, run.policy);
        std::ofstream f(run.output_file("divergence.csv"));
        f << "k,mean_ln_d,pairs\n";
        for (std::size_t i = 0; i < curve.ks.size(); ++i)
            f << curve.ks[i] << ',' << csv::fixed(curve.mean_ln_d[i], 6) << ','
              << curve.counts[i] << "\n";
        std::cout << "pairs = " << curve.pairs << ", slope = " << csv::fixed(curve.slope, 4)
                  << " over k in [" << curve.fit_lo << ", " << curve.fit_hi << "]\n";
        if (run.opts.plot) {
            std::vector<double> xs(curve.ks.begin(), curve.ks.end());
            svg::LinePlot plot("divergence curve", "k", "mean ln d(k)");
            plot.add_series("ln d", xs, curve.mean_ln_d);
            plot.write_file(run.output_file("divergence.svg").string());
        }
    } else if (tool == "hysteresis") {
        if (samples_per_loop <= 0)
            throw CLI::ValidationError("--samples-per-loop", "must be positive");
        const auto& zc = tab.column(column);
        const int loops = static_cast<int>(zc.size()) / samples_per_loop;
        const std::size_t used = static_cast<std::size_t>(loops) *
                                 static_cast<std::size_t>(samples_per_loop);
        const auto metrics = analysis::hysteresis_metrics(
            std::span(tab.bias).first(used), std::span(zc).first(used), loops);
        std::ofstream f(run.output_file("loops.csv"));
        f << "loop,area,pinch_v,range\n";
        for (std::size_t i = 0; i < metrics.size(); ++i)
            f << i << ',' << csv::fixed(metrics[i].area, 4) << ','
              << (metrics[i].has_pinch ? csv::fixed(metrics[i].pinch_voltage, 4) : "nan") << ','
              << csv::fixed(metrics[i].dynamic_range, 4) << "\n";
        std::cout << loops << " loops analyzed\n";
        if (run.opts.plot) {
            std::vector<double> idx, area;
            for (std::size_t i = 0; i < metrics.size(); ++i) {
                idx.push_back(static_cast<double>(i));
                area.push_back(std::abs(metrics[i].area));
            }
            svg::LinePlot plot("loop area", "loop", "|area| (V*ohm)");
            plot.add_series("area", idx, area);
            plot.write_file(run.output_file("loops.svg").string());
        }
    } else if (tool == "stats") {
        const auto stats = analysis::summary_stats(tab.column(column));
        std::ofstream f(run.output_file("stats.csv"));
        f << "mean,stddev,degenerate\n";
        f << csv::fixed(stats.mean, 6) << ',' << csv::fixed(stats.stddev, 6) << ','
          << (stats.degenerate ? 1 : 0) << "\n";
        f << "bin_lo,bin_width,count\n";
        for (std::size_t i = 0; i < stats.histogram.size(); ++i)
            f << csv::fixed(stats.bin_lo + stats.bin_width * static_cast<double>(i), 6) << ','
              << csv::fixed(stats.bin_width, 6) << ',' << stats.histogram[i] << "\n";
        std::cout << "mean = " << csv::fixed(stats.mean, 3)
                  << ", stddev = " << csv::fixed(stats.stddev, 3) << "\n";
        if (run.opts.plot) {
            std::vector<double> centers, counts;
            for (std::size_t i = 0; i < stats.histogram.size(); ++i) {
                centers.push_back(stats.bin_lo + stats.bin_width * (static_cast<double>(i) + 0.5));
                counts.push_back(static_cast<double>(stats.histogram[i]));
            }
            svg::LinePlot plot("histogram", column, "count");
            plot.add_series("count", centers, counts);
            plot.write_file(run.output_file("stats.svg").string());
        }
    } else {
        throw CLI::ValidationError("analyze", "unknown tool: " + tool);
    }
    run.finish(0.0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ferrolab - virtual memristive-colloid laboratory"};
    app.require_subcommand(1);

    std::string command_line;
    for (int i = 0; i < argc; ++i) {
        if (i) command_line += ' ';
        command_line += argv[i];
    }

    // check
    auto* check_cmd = app.add_subcommand("check", "Statically check an experiment script");
    std::string check_path;
    check_cmd->add_option("script", check_path, "Script file (.ffx)")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "Run an experiment script");
    CommonOpts run_opts;
    std::string run_path;
    run_cmd->add_option("script", run_path, "Script file (.ffx)")->required();
    add_common(run_cmd, run_opts);

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Run a canned experiment");
    CommonOpts exp_opts;
    std::string exp_name;
    int exp_loops = 50, exp_levels = 16, exp_iterations = 100, exp_weighted = 4, exp_reps = 20,
        exp_cycles = 20;
    double exp_k = -0.9;
    exp_cmd->add_option("name", exp_name,
                        "hysteresis | memory | pulse-memory | differentiation | classify |"
                        " adaptation | dynamics-reduction | chaos-probe")
        ->required();
    exp_cmd->add_option("--loops", exp_loops, "Hysteresis loops")->capture_default_str();
    exp_cmd->add_option("--levels", exp_levels, "Memory ladder levels")->capture_default_str();
    exp_cmd->add_option("--iterations", exp_iterations, "Reduction iterations")
        ->capture_default_str();
    exp_cmd->add_option("--weighted", exp_weighted, "Weighted digit")->capture_default_str();
    exp_cmd->add_option("--reps", exp_reps, "Adaptation repetitions")->capture_default_str();
    exp_cmd->add_option("--cycles", exp_cycles, "Chaos-probe cycles")->capture_default_str();
    exp_cmd->add_option("--offset-k", exp_k, "Adaptation offset scale (negative)")
        ->capture_default_str();
    add_common(exp_cmd, exp_opts);

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit the indicator calibration map");
    CommonOpts cal_opts;
    add_common(cal_cmd, cal_opts);

    // prc-collect
    auto* col_cmd = app.add_subcommand("prc-collect", "Collect the reservoir training set");
    CommonOpts col_opts;
    int col_reps = 50;
    col_cmd->add_option("--reps", col_reps, "Repetitions of digits 0-3")->capture_default_str();
    add_common(col_cmd, col_opts);

    // prc-train
    auto* train_cmd = app.add_subcommand("prc-train", "Train the readout network");
    CommonOpts train_opts;
    std::string train_data, train_variant = "full";
    int train_epochs = 2000;
    double train_lr = 0.01;
    train_cmd->add_option("--data", train_data, "dataset.csv from prc-collect")->required();
    train_cmd->add_option("--epochs", train_epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--lr", train_lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--variant", train_variant, "full | single | two-layer")
        ->capture_default_str();
    add_common(train_cmd, train_opts);

    // prc-serve
    auto* serve_cmd = app.add_subcommand("prc-serve", "Serve inference over UDP");
    CommonOpts serve_opts;
    std::string serve_model;
    int serve_port = 0;
    double serve_duration = 0;
    serve_cmd->add_option("--model", serve_model, "Trained model file")->required();
    serve_cmd->add_option("--port", serve_port, "UDP port (0 = ephemeral)")
        ->capture_default_str();
    serve_cmd->add_option("--duration", serve_duration, "Stop after this many seconds (0 = run)")
        ->capture_default_str();
    add_common(serve_cmd, serve_opts);

    // prc-stream
    auto* stream_cmd = app.add_subcommand("prc-stream", "Stream serialized digits to a service");
    CommonOpts stream_opts;
    std::string stream_host = "127.0.0.1";
    int stream_port = 0, stream_reps = 50;
    stream_cmd->add_option("--host", stream_host, "Service address")->capture_default_str();
    stream_cmd->add_option("--port", stream_port, "Service port")->required();
    stream_cmd->add_option("--reps", stream_reps, "Repetitions of digits 0-3")
        ->capture_default_str();
    add_common(stream_cmd, stream_opts);

    // analyze
    auto* ana_cmd = app.add_subcommand("analyze", "Analyze a logged sweep CSV");
    CommonOpts ana_opts;
    std::string ana_tool, ana_input, ana_column = "zc22";
    double ana_eps = 0.1;
    int ana_kmax = 12, ana_spl = 0;
    ana_cmd->add_option("tool", ana_tool, "lyapunov | hysteresis | stats")->required();
    ana_cmd->add_option("--input", ana_input, "Instruments log CSV")->required();
    ana_cmd->add_option("--column", ana_column, "Log column")->capture_default_str();
    ana_cmd->add_option("--eps", ana_eps, "Pairing bound")->capture_default_str();
    ana_cmd->add_option("--k-max", ana_kmax, "Divergence horizon")->capture_default_str();
    ana_cmd->add_option("--samples-per-loop", ana_spl, "Loop length for hysteresis analysis");
    add_common(ana_cmd, ana_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        if (check_cmd->parsed()) return cmd_check(check_path);
        Run run;
        if (run_cmd->parsed()) {
            run.opts = run_opts;
            run.begin(command_line);
            return cmd_run(run, run_path);
        }
        if (exp_cmd->parsed()) {
            run.opts = exp_opts;
            run.begin(command_line);
            return cmd_experiment(run, exp_name, exp_loops, exp_levels, exp_iterations,
                                  exp_weighted, exp_reps, exp_cycles, exp_k);
        }
        if (cal_cmd->parsed()) {
            run.opts = cal_opts;
            run.begin(command_line);
            return cmd_calibrate(run);
        }
        if (col_cmd->parsed()) {
            run.opts = col_opts;
            run.begin(command_line);
            return cmd_prc_collect(run, col_reps);
        }
        if (train_cmd->parsed()) {
            run.opts = train_opts;
            run.begin(command_line);
            return cmd_prc_train(run, train_data, train_epochs, train_lr, train_variant);
        }
        if (serve_cmd->parsed()) {
            run.opts = serve_opts;
            run.begin(command_line);
            return cmd_prc_serve(run, serve_model, serve_port, serve_duration);
        }
        if (stream_cmd->parsed()) {
            run.opts = stream_opts;
            run.begin(command_line);
            return cmd_prc_stream(run, stream_host, stream_port, stream_reps);
        }
        if (ana_cmd->parsed()) {
            run.opts = ana_opts;
            run.begin(command_line);
            return cmd_analyze(run, ana_tool, ana_input, ana_column, ana_eps, ana_kmax,
                               ana_spl);
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
