#include "ffl/testbench.hpp"

#include <cmath>
#include <ostream>

#include "ffl/csv.hpp"
#include "ffl/errors.hpp"

namespace ffl::bench {

Testbench::Testbench(device::DeviceParams params, rf::SweepConfig sweep_cfg,
                     BenchTiming timing, ExecPolicy policy)
    : params_(std::move(params)),
      state_(device::DeviceState::fresh(params_)),
      sweep_cfg_(sweep_cfg),
      timing_(timing),
      policy_(policy) {
    sweep_cfg_.validate();
}

void Testbench::catch_up() {
    const double lag = clock_ - state_.t;
    if (lag > 0) state_ = device::step(std::move(state_), params_, bias_, lag);
}

void Testbench::set_bias(double volts) {
    if (std::abs(volts) > 10.0) throw BiasOutOfRange(volts);
    catch_up();
    bias_ = volts;
    clock_ += timing_.command_latency;
}

void Testbench::wait(double seconds) {
    if (seconds < 0) throw InvalidDuration(seconds);
    clock_ += seconds;
    catch_up();
}

rf::SweepResult Testbench::sweep_once() {
    catch_up();
    rf::SweepResult res = sweep::eval(state_, params_, sweep_cfg_, policy_);
    res.t = clock_;
    log_.push_back({res.t, bias_, res.zc11, res.zc12, res.zc21, res.zc22});
    clock_ += timing_.sweep_duration;
    return res;
}

void Testbench::export_log_csv(std::ostream& os) const {
    ffl::bench::export_log_csv(os, log_);
}

void export_log_csv(std::ostream& os, const std::vector<LogRow>& rows) {
    os << "t_s,bias_v,zc11,zc12,zc21,zc22\n";
    for (const auto& r : rows) {
        os << csv::fixed(r.t, 3) << ',' << csv::fixed(r.bias, 4) << ','
           << csv::fixed(r.zc11, 6) << ',' << csv::fixed(r.zc12, 6) << ','
           << csv::fixed(r.zc21, 6) << ',' << csv::fixed(r.zc22, 6) << '\n';
    }
}

}  // namespace ffl::bench
