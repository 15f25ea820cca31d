#include "ffl/prc.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cstring>

#include "ffl/control.hpp"
#include "ffl/errors.hpp"
#include "ffl/experiments.hpp"

namespace ffl::prc {

namespace {

constexpr std::array<unsigned char, 8> kMagic = {'F', 'F', 'P', 'R', 'C', 0, 0, 1};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}
std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}
double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace

CollectResult collect_dataset(bench::Testbench& tb, const digits::DigitSet& ds,
                              const CollectConfig& cfg) {
    CollectResult out;
    const auto weights = experiments::uniform_weights(cfg.pixel_dwell);
    for (int rep = 0; rep < cfg.reps; ++rep) {
        bool rep_ok = true;
        for (int d = 0; d < 4 && rep_ok; ++d) {
            try {
                control::prc_reset(tb, cfg.reset_low, cfg.reset_high, cfg.reset_star,
                                   cfg.reset_tol);
            } catch (const SetpointUnreachable& ex) {
                out.skipped.push_back("rep " + std::to_string(rep) + " digit " +
                                      std::to_string(d) + ": " + ex.what());
                rep_ok = false;
                break;
            }
            const auto sched =
                experiments::serialize_digit(ds[d], weights, cfg.v_black, cfg.v_white);
            const auto zc = experiments::stream_schedule(tb, sched, true);
            nn::Sample s;
            std::copy(zc.begin(), zc.end(), s.features.begin());
            s.label = d;
            s.target = static_cast<double>(d) / 3.0;
            out.samples.push_back(s);
        }
    }
    return out;
}

// --- wire format -----------------------------------------------------------------

std::string encode_features(const FeaturePacket& p) {
    std::string out;
    out.reserve(kFeaturePacketSize);
    out.append(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
    put_u32(out, p.seq);
    out.push_back(static_cast<char>(p.label));
    for (double f : p.features) put_f64(out, f);
    return out;
}

std::optional<FeaturePacket> decode_features(const void* data, std::size_t len) {
    if (len != kFeaturePacketSize) return std::nullopt;
    const auto* p = static_cast<const unsigned char*>(data);
    if (std::memcmp(p, kMagic.data(), kMagic.size()) != 0) return std::nullopt;
    FeaturePacket out;
    out.seq = get_u32(p + 8);
    out.label = p[12];
    for (std::size_t i = 0; i < nn::kFeatures; ++i) out.features[i] = get_f64(p + 13 + 8 * i);
    return out;
}

std::string encode_result(const ResultPacket& p) {
    std::string out;
    out.reserve(kResultPacketSize);
    out.append(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
    put_u32(out, p.seq);
    out.push_back(static_cast<char>(p.predicted));
    put_f64(out, p.score);
    return out;
}

std::optional<ResultPacket> decode_result(const void* data, std::size_t len) {
    if (len != kResultPacketSize) return std::nullopt;
    const auto* p = static_cast<const unsigned char*>(data);
    if (std::memcmp(p, kMagic.data(), kMagic.size()) != 0) return std::nullopt;
    ResultPacket out;
    out.seq = get_u32(p + 8);
    out.predicted = p[12];
    out.score = get_f64(p + 13);
    return out;
}

// --- service -------------------------------------------------------------------------

InferenceService::InferenceService(nn::ReadoutModel model, std::uint16_t port)
    : model_(std::move(model)) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw ServiceStartError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw ServiceStartError("bind() failed on port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_.store(true);
    thread_ = std::thread([this] { loop(); });
}

InferenceService::~InferenceService() { stop(); }

void InferenceService::stop() {
    if (running_.exchange(false) && thread_.joinable()) thread_.join();
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::vector<ServiceRecord> InferenceService::results() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return results_;
}

void InferenceService::loop() {
    // Oversized datagrams are received in full (and then dropped as
    // malformed) rather than silently truncated.
    std::vector<unsigned char> buf(4 * kFeaturePacketSize);
    while (running_.load()) {
        pollfd pfd{fd_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, 50);
        if (rc <= 0) continue;
        sockaddr_in peer{};
        socklen_t peer_len = sizeof(peer);
        const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                                     reinterpret_cast<sockaddr*>(&peer), &peer_len);
        if (n <= 0) continue;
        const auto packet = decode_features(buf.data(), static_cast<std::size_t>(n));
        if (!packet) {
            malformed_.fetch_add(1);
            continue;
        }
        const double s = model_.score(packet->features);
        const int d = model_.digit(s);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            results_.push_back({packet->seq, packet->label, d, s});
        }
        ResultPacket reply{packet->seq, static_cast<std::uint8_t>(d), s};
        const std::string bytes = encode_result(reply);
        ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&peer),
                 peer_len);
    }
}

// --- streaming client ------------------------------------------------------------------

StreamReport stream_digits(bench::Testbench& tb, const digits::DigitSet& ds,
                           std::span<const int> digit_sequence, const std::string& host,
                           std::uint16_t port, const StreamConfig& cfg) {
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw ServiceStartError("client socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::invalid_argument("bad address: " + host);
    }

    StreamReport report;
    const auto weights = experiments::uniform_weights(cfg.collect.pixel_dwell);
    std::uint32_t seq = 0;
    for (int d : digit_sequence) {
        control::prc_reset(tb, cfg.collect.reset_low, cfg.collect.reset_high,
                           cfg.collect.reset_star, cfg.collect.reset_tol);
        const auto sched =
            experiments::serialize_digit(ds[d], weights, cfg.collect.v_black,
                                         cfg.collect.v_white);
        const auto zc = experiments::stream_schedule(tb, sched, true);

        FeaturePacket packet;
        packet.seq = seq;
        packet.label = static_cast<std::uint8_t>(d);
        std::copy(zc.begin(), zc.end(), packet.features.begin());
        const std::string bytes = encode_features(packet);
        ::sendto(fd, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr),
                 sizeof(addr));
        ++report.sent;

        StreamOutcome outcome{seq, d, -1, 0.0};
        pollfd pfd{fd, POLLIN, 0};
        const int timeout_ms = static_cast<int>(cfg.reply_timeout * 1000.0);
        if (::poll(&pfd, 1, timeout_ms) > 0) {
            unsigned char rbuf[64];
            const ssize_t n = ::recv(fd, rbuf, sizeof(rbuf), 0);
            if (n > 0) {
                if (const auto reply = decode_result(rbuf, static_cast<std::size_t>(n));
                    reply && reply->seq == seq) {
                    outcome.predicted = reply->predicted;
                    outcome.score = reply->score;
                    ++report.replies;
                }
            }
        }
        report.outcomes.push_back(outcome);
        ++seq;
    }
    ::close(fd);
    return report;
}

}  // namespace ffl::prc
