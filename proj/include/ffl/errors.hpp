#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ffl {

// Domain error types. Each carries enough context to report the failure
// without re-deriving it at the catch site.

struct BiasOutOfRange : std::runtime_error {
    double volts;
    explicit BiasOutOfRange(double v)
        : std::runtime_error("bias out of range: " + std::to_string(v) +
                             " V (limit is +/-10 V)"),
          volts(v) {}
};

struct InvalidDuration : std::runtime_error {
    double seconds;
    explicit InvalidDuration(double d)
        : std::runtime_error("invalid duration: " + std::to_string(d) + " s"),
          seconds(d) {}
};

struct SingularConversion : std::runtime_error {
    // Frequency index within the sweep, or npos for a standalone conversion.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t freq_index;
    explicit SingularConversion(std::size_t index = npos)
        : std::runtime_error(index == npos
                                 ? std::string("singular two-port conversion")
                                 : "singular two-port conversion at frequency index " +
                                       std::to_string(index)),
          freq_index(index) {}
};

struct EmptySweep : std::runtime_error {
    EmptySweep() : std::runtime_error("empty sweep: no samples to collapse") {}
};

struct SetpointUnreachable : std::runtime_error {
    double last_zc;
    std::size_t ticks;
    SetpointUnreachable(double zc, std::size_t used)
        : std::runtime_error("setpoint unreachable after " + std::to_string(used) +
                             " ticks, last indicator " + std::to_string(zc) + " ohm"),
          last_zc(zc), ticks(used) {}
};

struct DivergedTraining : std::runtime_error {
    std::size_t epoch;
    explicit DivergedTraining(std::size_t e)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(e)),
          epoch(e) {}
};

struct ShapeMismatch : std::runtime_error {
    std::size_t expected, got;
    ShapeMismatch(std::size_t want, std::size_t have)
        : std::runtime_error("feature shape mismatch: expected " + std::to_string(want) +
                             ", got " + std::to_string(have)),
          expected(want), got(have) {}
};

struct ServiceStartError : std::runtime_error {
    explicit ServiceStartError(const std::string& why)
        : std::runtime_error("failed to start datagram service: " + why) {}
};

struct ModelNotFound : std::runtime_error {
    explicit ModelNotFound(const std::string& path)
        : std::runtime_error("model file not found: " + path) {}
};

struct ModelFormatError : std::runtime_error {
    explicit ModelFormatError(const std::string& why)
        : std::runtime_error("bad model file: " + why) {}
};

struct InsufficientPairs : std::runtime_error {
    InsufficientPairs()
        : std::runtime_error("no index pairs within the divergence bound") {}
};

struct DegenerateSeries : std::runtime_error {
    DegenerateSeries() : std::runtime_error("series is constant; cannot normalize") {}
};

struct PartialLoop : std::runtime_error {
    explicit PartialLoop(const std::string& why)
        : std::runtime_error("incomplete hysteresis loop: " + why) {}
};

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& why)
        : std::runtime_error("insufficient data: " + why) {}
};

}  // namespace ffl
