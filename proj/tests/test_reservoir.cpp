#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "ffl/errors.hpp"
#include "ffl/nn.hpp"
#include "ffl/prc.hpp"
#include "ffl/prng.hpp"

using namespace ffl;
using nn::Sample;
using nn::TrainConfig;
using nn::Variant;

namespace {

// Synthetic label-separable features: four well-separated level bands plus
// mild per-feature structure.
std::vector<Sample> synthetic_samples(std::size_t per_label, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Sample> out;
    for (int label = 0; label < 4; ++label) {
        for (std::size_t k = 0; k < per_label; ++k) {
            Sample s;
            s.label = label;
            s.target = label / 3.0;
            for (std::size_t j = 0; j < nn::kFeatures; ++j) {
                const double base = 16400.0 - 120.0 * label - 0.8 * static_cast<double>(j);
                s.features[j] = base + rng.next_in(-4.0, 4.0);
            }
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("training rejects invalid configurations") {
    const auto samples = synthetic_samples(4, 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(nn::train(samples, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.lr = 0.0;
    CHECK_THROWS_AS(nn::train(samples, cfg), std::invalid_argument);

    std::vector<Sample> few(samples.begin(), samples.begin() + 4);
    CHECK_THROWS_AS(nn::train(few, TrainConfig{}), std::invalid_argument);

    auto missing = samples;
    for (auto& s : missing) s.label = s.label == 3 ? 2 : s.label;  // drop label 3
    CHECK_THROWS_AS(nn::train(missing, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences") {
    const auto samples = synthetic_samples(3, 77);
    for (Variant variant : {Variant::Full, Variant::SingleLayer, Variant::TwoLayer41}) {
        TrainConfig cfg;
        cfg.variant = variant;
        cfg.epochs = 1;
        cfg.seed = 5;
        auto model = nn::train(samples, cfg);  // some steps away from init

        const auto layout = nn::Layout::of(variant);
        std::vector<double> grad(layout.total);
        const double loss0 = nn::loss_and_grad(model, samples, grad, ExecPolicy::Serial);
        CHECK(std::isfinite(loss0));

        // probe a deterministic spread of parameters (every layer gets hit)
        double worst = 0;
        for (std::size_t k = 0; k < layout.total;
             k += std::max<std::size_t>(1, layout.total / 97)) {
            const double h = 1e-5;
            auto plus = model;
            plus.theta[k] += h;
            auto minus = model;
            minus.theta[k] -= h;
            std::vector<double> scratch(layout.total);
            const double lp = nn::loss_and_grad(plus, samples, scratch, ExecPolicy::Serial);
            const double lm = nn::loss_and_grad(minus, samples, scratch, ExecPolicy::Serial);
            const double numeric = (lp - lm) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
            worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("training separates synthetic labels and is deterministic") {
    const auto samples = synthetic_samples(8, 3);
    TrainConfig cfg;
    cfg.epochs = 400;
    const auto model = nn::train(samples, cfg);
    int hits = 0;
    for (const auto& s : samples) hits += model.digit(model.score(s.features)) == s.label;
    CHECK(hits == static_cast<int>(samples.size()));

    const auto again = nn::train(samples, cfg);
    CHECK(model.theta == again.theta);  // bit-identical parameters
    CHECK(model.metrics.final_loss == again.metrics.final_loss);

    TrainConfig other = cfg;
    other.seed = 99;
    const auto different = nn::train(samples, other);
    CHECK(model.theta != different.theta);
}

TEST_CASE("normalization maps the training box onto [0,1] and is idempotent there") {
    const auto samples = synthetic_samples(6, 9);
    nn::Normalizer norm;
    norm.fit(samples);
    for (const auto& s : samples) {
        const auto z = norm.apply(s.features);
        for (double v : z) {
            CHECK(v >= -1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
    // re-fitting on normalized data gives the identity
    std::vector<Sample> normed = samples;
    for (auto& s : normed) {
        const auto z = norm.apply(s.features);
        std::copy(z.begin(), z.end(), s.features.begin());
    }
    nn::Normalizer unit;
    unit.fit(normed);
    const auto z = unit.apply(normed.front().features);
    for (std::size_t j = 0; j < nn::kFeatures; ++j)
        CHECK(z[j] == doctest::Approx(normed.front().features[j]).epsilon(1e-12));
}

TEST_CASE("inference uses frozen statistics and validates the shape") {
    const auto samples = synthetic_samples(6, 21);
    TrainConfig cfg;
    cfg.epochs = 50;
    const auto model = nn::train(samples, cfg);

    const auto& f = samples.front().features;
    const double s1 = model.score(f);
    // scoring other samples in between must not affect a repeat evaluation
    model.score(samples.back().features);
    CHECK(model.score(f) == s1);

    std::vector<double> short_vec(63, 0.0);
    CHECK_THROWS_AS(model.score(short_vec), ShapeMismatch);

    std::vector<double> zeros(64, 0.0);
    const double sz = model.score(zeros);
    CHECK(model.digit(sz) >= 0);
    CHECK(model.digit(sz) <= 3);

    CHECK(model.digit(0.0) == 0);
    CHECK(model.digit(1.0) == 3);
    CHECK(model.digit(0.34) == 1);
}

TEST_CASE("model file round trip") {
    const auto samples = synthetic_samples(4, 13);
    TrainConfig cfg;
    cfg.epochs = 20;
    const auto model = nn::train(samples, cfg);

    const auto path = std::filesystem::temp_directory_path() / "ffl_model_test.bin";
    model.save_file(path.string());
    const auto loaded = nn::ReadoutModel::load_file(path.string());
    CHECK(loaded.theta == model.theta);
    CHECK(loaded.bn_mean == model.bn_mean);
    CHECK(loaded.norm.lo == model.norm.lo);
    CHECK(loaded.metrics.rmse == model.metrics.rmse);
    CHECK(loaded.score(samples[5].features) == model.score(samples[5].features));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(nn::ReadoutModel::load_file("/nonexistent/model.bin"), ModelNotFound);
}

TEST_CASE("wire format: exact sizes and round trip") {
    CHECK(prc::kFeaturePacketSize == 525);
    CHECK(prc::kResultPacketSize == 21);

    prc::FeaturePacket p;
    p.seq = 0xDEADBEEF;
    p.label = 2;
    SplitMix64 rng(5);
    for (auto& f : p.features) f = rng.next_in(12000.0, 18000.0);
    const auto bytes = encode_features(p);
    REQUIRE(bytes.size() == prc::kFeaturePacketSize);
    // magic and little-endian sequence bytes are pinned
    CHECK(bytes.substr(0, 5) == "FFPRC");
    CHECK(bytes[5] == '\0');
    CHECK(bytes[6] == '\0');
    CHECK(bytes[7] == '\x01');
    CHECK(static_cast<unsigned char>(bytes[8]) == 0xEF);
    CHECK(static_cast<unsigned char>(bytes[11]) == 0xDE);

    const auto back = prc::decode_features(bytes.data(), bytes.size());
    REQUIRE(back.has_value());
    CHECK(back->seq == p.seq);
    CHECK(back->label == p.label);
    CHECK(back->features == p.features);

    CHECK(!prc::decode_features(bytes.data(), bytes.size() - 1).has_value());  // truncated
    auto corrupted = bytes;
    corrupted[0] = 'X';
    CHECK(!prc::decode_features(corrupted.data(), corrupted.size()).has_value());

    prc::ResultPacket r{7, 3, 0.75};
    const auto rb = encode_result(r);
    REQUIRE(rb.size() == prc::kResultPacketSize);
    const auto rback = prc::decode_result(rb.data(), rb.size());
    REQUIRE(rback.has_value());
    CHECK(rback->seq == 7);
    CHECK(rback->predicted == 3);
    CHECK(rback->score == 0.75);
}

TEST_CASE("service: loopback round trip, malformed datagrams dropped") {
    const auto samples = synthetic_samples(8, 404);
    TrainConfig cfg;
    cfg.epochs = 200;
    auto model = nn::train(samples, cfg);
    prc::InferenceService service(model, 0);
    REQUIRE(service.port() != 0);

    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(service.port());
    inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);

    // a valid packet gets a reply with a digit in range
    prc::FeaturePacket p;
    p.seq = 42;
    p.label = 1;
    p.features = samples[9].features;
    const auto bytes = prc::encode_features(p);
    ::sendto(fd, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr),
             sizeof(addr));
    pollfd pfd{fd, POLLIN, 0};
    REQUIRE(::poll(&pfd, 1, 3000) == 1);
    unsigned char rbuf[64];
    const ssize_t n = ::recv(fd, rbuf, sizeof(rbuf), 0);
    const auto reply = prc::decode_result(rbuf, static_cast<std::size_t>(n));
    REQUIRE(reply.has_value());
    CHECK(reply->seq == 42);
    CHECK(reply->predicted >= 0);
    CHECK(reply->predicted <= 3);

    // truncated payload: counted, dropped, no crash, no reply
    ::sendto(fd, bytes.data(), bytes.size() - 10, 0, reinterpret_cast<sockaddr*>(&addr),
             sizeof(addr));
    // oversized payload: likewise
    std::string big = bytes + bytes;
    ::sendto(fd, big.data(), big.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    for (int i = 0; i < 100 && service.malformed_count() < 2; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(service.malformed_count() == 2);

    service.stop();
    const auto results = service.results();
    REQUIRE(results.size() == 1);
    CHECK(results[0].seq == 42);
    CHECK(results[0].true_label == 1);
    ::close(fd);
}

TEST_CASE("dataset collection: one rep yields four monotone feature curves") {
    const auto& ds = digits::DigitSet::builtin();
    device::DeviceParams p;
    p.chaos_eps = 0.0;  // the monotone feature contract is a model property
    bench::Testbench tb(p, {}, bench::BenchTiming{0.1, 0.05});
    prc::CollectConfig cfg;
    cfg.reps = 1;
    const auto res = prc::collect_dataset(tb, ds, cfg);
    REQUIRE(res.samples.size() == 4);
    CHECK(res.skipped.empty());
    for (const auto& s : res.samples) {
        // the curve starts near the working point (one pixel of drift past
        // the reset landing, which test_control pins at 2x the tolerance)
        CHECK(std::abs(s.features.front() - cfg.reset_star) < 60.0);
        for (std::size_t i = 1; i < s.features.size(); ++i)
            CHECK(s.features[i] <= s.features[i - 1] + 1e-9);  // non-increasing
        CHECK(s.target == doctest::Approx(s.label / 3.0));
    }
}

TEST_CASE("gradient reduction is bit-identical under both execution policies") {
    const auto samples = synthetic_samples(16, 31);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.policy = ExecPolicy::Serial;
    const auto serial = nn::train(samples, cfg);
    cfg.policy = ExecPolicy::Parallel;
    const auto parallel = nn::train(samples, cfg);
    CHECK(serial.theta == parallel.theta);
    CHECK(serial.metrics.final_loss == parallel.metrics.final_loss);
}

TEST_CASE("variant stacks train and carry their parameter counts") {
    const auto samples = synthetic_samples(8, 55);
    for (Variant v : {Variant::SingleLayer, Variant::TwoLayer41}) {
        TrainConfig cfg;
        cfg.variant = v;
        cfg.epochs = 300;
        cfg.lr = 0.05;
        const auto model = nn::train(samples, cfg);
        CHECK(model.theta.size() == nn::Layout::of(v).total);
        CHECK(std::isfinite(model.metrics.rmse));
        // the reduced stacks still fit the separable set reasonably
        int hits = 0;
        for (const auto& s : samples) hits += model.digit(model.score(s.features)) == s.label;
        CHECK(hits > static_cast<int>(samples.size() / 2));
    }
}
