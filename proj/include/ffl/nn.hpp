#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffl/parallel.hpp"

namespace ffl::nn {

constexpr std::size_t kFeatures = 64;

// One serialized digit: the port-2 indicator after each pixel.
struct Sample {
    std::array<double, kFeatures> features{};
    int label = 0;        // digit 0..3
    double target = 0;    // label / 3 in [0, 1]
};

enum class Variant : std::uint32_t { Full = 0, SingleLayer = 1, TwoLayer41 = 2 };

struct TrainConfig {
    int epochs = 2000;
    double lr = 0.01;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;  // adaptive-moment settings
    int batch_size = 0;  // 0 = full batch (default: deterministic single batch)
    std::uint64_t seed = 1;
    Variant variant = Variant::Full;
    ExecPolicy policy = ExecPolicy::Parallel;
};

struct Metrics {
    double final_loss = 0;  // mean squared error
    double rmse = 0;
    int epochs = 0;
};

// Min-max normalization bounds fitted on the training features.
struct Normalizer {
    std::array<double, kFeatures> lo{}, hi{};
    void fit(std::span<const Sample> samples);
    std::array<double, kFeatures> apply(std::span<const double> features) const;
};

// Trained readout: normalize -> dense stack with sigmoid activations, the
// full variant carrying a batch-normalization block with frozen inference
// statistics.
class ReadoutModel {
public:
    Variant variant = Variant::Full;
    Normalizer norm;
    std::vector<double> theta;            // all trainable parameters, flat
    std::array<double, kFeatures> bn_mean{}, bn_var{};  // frozen running stats
    Metrics metrics;

    // Deterministic forward pass. Throws ShapeMismatch unless 64 features.
    double score(std::span<const double> features) const;
    int digit(double score_value) const;  // round(3 * score), clamped to 0..3

    void save_file(const std::string& path) const;
    static ReadoutModel load_file(const std::string& path);
};

// Parameter layout of the flat theta vector (used by training and tests).
struct Layout {
    std::size_t w1 = 0, b1 = 0, gamma = 0, beta = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;
    std::size_t total = 0;
    std::size_t hidden1 = 0, hidden2 = 0;
    static Layout of(Variant v);
};

// Gradient-trained readout. Full-batch by default; per-chunk partial
// gradients are combined in fixed order, so the result is bit-identical
// for any thread count. Throws DivergedTraining on a non-finite loss.
ReadoutModel train(std::span<const Sample> samples, const TrainConfig& cfg);

// Mean squared error and its gradient for the current parameters; exposed
// for the finite-difference checks in the test suite.
double loss_and_grad(const ReadoutModel& model, std::span<const Sample> samples,
                     std::span<double> grad_out, ExecPolicy policy);

}  // namespace ffl::nn
