#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ffl/digits.hpp"
#include "ffl/nn.hpp"
#include "ffl/testbench.hpp"

namespace ffl::prc {

// --- dataset collection ------------------------------------------------------

struct CollectConfig {
    int reps = 50;
    double pixel_dwell = 2.0;  // s
    double v_black = -3.3, v_white = 0.0;
    double reset_low = 16350.0, reset_high = 16450.0, reset_star = 16400.0;
    double reset_tol = 2.5;
};

struct CollectResult {
    std::vector<nn::Sample> samples;
    std::vector<std::string> skipped;  // reps aborted by an unreachable reset
};

// For each rep and digit 0-3: reset sequence, then 64 constant-weight
// pixels with a reading after each. Reset measurements are excluded from
// the samples.
CollectResult collect_dataset(bench::Testbench& tb, const digits::DigitSet& ds,
                              const CollectConfig& cfg = {});

// --- datagram wire format ------------------------------------------------------

// Feature datagram: 8-byte magic, u32le sequence, u8 true label (255 =
// unknown), 64 f64le features; 525 bytes total.
constexpr std::size_t kFeaturePacketSize = 8 + 4 + 1 + 64 * 8;
// Reply: magic, u32le sequence, u8 predicted digit, f64le score; 21 bytes.
constexpr std::size_t kResultPacketSize = 8 + 4 + 1 + 8;
constexpr std::uint8_t kLabelUnknown = 255;

struct FeaturePacket {
    std::uint32_t seq = 0;
    std::uint8_t label = kLabelUnknown;
    std::array<double, nn::kFeatures> features{};
};

struct ResultPacket {
    std::uint32_t seq = 0;
    std::uint8_t predicted = 0;
    double score = 0;
};

std::string encode_features(const FeaturePacket& p);
std::optional<FeaturePacket> decode_features(const void* data, std::size_t len);
std::string encode_result(const ResultPacket& p);
std::optional<ResultPacket> decode_result(const void* data, std::size_t len);

// --- inference service ------------------------------------------------------------

struct ServiceRecord {
    std::uint32_t seq;
    std::uint8_t true_label;
    int predicted;
    double score;
};

// UDP inference endpoint: decodes feature datagrams, runs the readout, logs
// the result and replies. Malformed or oversized datagrams are counted and
// dropped. Datagrams are processed one at a time.
class InferenceService {
public:
    InferenceService(nn::ReadoutModel model, std::uint16_t port);  // 0 = ephemeral
    ~InferenceService();
    InferenceService(const InferenceService&) = delete;
    InferenceService& operator=(const InferenceService&) = delete;

    std::uint16_t port() const { return port_; }
    std::size_t malformed_count() const { return malformed_.load(); }
    std::vector<ServiceRecord> results() const;
    void stop();

private:
    void loop();

    nn::ReadoutModel model_;
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::size_t> malformed_{0};
    mutable std::mutex mutex_;
    std::vector<ServiceRecord> results_;
    std::thread thread_;
};

// --- streaming client ---------------------------------------------------------------

struct StreamConfig {
    CollectConfig collect;       // reset + pixel parameters
    double reply_timeout = 2.0;  // s, wall clock
};

struct StreamOutcome {
    std::uint32_t seq;
    int true_digit;
    int predicted;  // -1 when no reply arrived
    double score;
};

struct StreamReport {
    std::vector<StreamOutcome> outcomes;
    std::size_t sent = 0, replies = 0;
};

// Serialize each digit on the bench and send one datagram per completed
// digit to the service, collecting replies.
StreamReport stream_digits(bench::Testbench& tb, const digits::DigitSet& ds,
                           std::span<const int> digit_sequence, const std::string& host,
                           std::uint16_t port, const StreamConfig& cfg = {});

}  // namespace ffl::prc
