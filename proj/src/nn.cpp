#include "ffl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ffl/errors.hpp"
#include "ffl/prng.hpp"

namespace ffl::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // running = m*running + (1-m)*batch
constexpr std::size_t kChunk = 16;   // fixed reduction granularity

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Layout Layout::of(Variant v) {
    Layout l;
    switch (v) {
        case Variant::Full:
            l.hidden1 = 64;
            l.hidden2 = 14;
            l.w1 = 0;
            l.b1 = l.w1 + 64 * kFeatures;
            l.gamma = l.b1 + 64;
            l.beta = l.gamma + 64;
            l.w2 = l.beta + 64;
            l.b2 = l.w2 + 14 * 64;
            l.w3 = l.b2 + 14;
            l.b3 = l.w3 + 14;
            l.total = l.b3 + 1;
            break;
        case Variant::SingleLayer:
            l.hidden1 = 0;
            l.hidden2 = 0;
            l.w1 = 0;                       // 1 x 64
            l.b1 = kFeatures;
            l.total = kFeatures + 1;
            break;
        case Variant::TwoLayer41:
            l.hidden1 = 4;
            l.hidden2 = 0;
            l.w1 = 0;                       // 4 x 64
            l.b1 = 4 * kFeatures;
            l.w2 = l.b1 + 4;                // 1 x 4
            l.b2 = l.w2 + 4;
            l.total = l.b2 + 1;
            break;
    }
    return l;
}

void Normalizer::fit(std::span<const Sample> samples) {
    lo.fill(1e300);
    hi.fill(-1e300);
    for (const auto& s : samples)
        for (std::size_t j = 0; j < kFeatures; ++j) {
            lo[j] = std::min(lo[j], s.features[j]);
            hi[j] = std::max(hi[j], s.features[j]);
        }
}

std::array<double, kFeatures> Normalizer::apply(std::span<const double> features) const {
    std::array<double, kFeatures> out{};
    for (std::size_t j = 0; j < kFeatures; ++j) {
        const double scale = hi[j] - lo[j];
        out[j] = (features[j] - lo[j]) / (scale > 1e-12 ? scale : 1.0);
    }
    return out;
}

// --- forward (frozen statistics) --------------------------------------------

double ReadoutModel::score(std::span<const double> features) const {
    if (features.size() != kFeatures) throw ShapeMismatch(kFeatures, features.size());
    const auto xn = norm.apply(features);
    const Layout l = Layout::of(variant);
    const double* th = theta.data();

    if (variant == Variant::SingleLayer) {
        double z = th[l.b1];
        for (std::size_t j = 0; j < kFeatures; ++j) z += th[l.w1 + j] * xn[j];
        return sigmoid(z);
    }
    if (variant == Variant::TwoLayer41) {
        double h[4];
        for (std::size_t i = 0; i < 4; ++i) {
            double z = th[l.b1 + i];
            for (std::size_t j = 0; j < kFeatures; ++j) z += th[l.w1 + i * kFeatures + j] * xn[j];
            h[i] = sigmoid(z);
        }
        double z = th[l.b2];
        for (std::size_t i = 0; i < 4; ++i) z += th[l.w2 + i] * h[i];
        return sigmoid(z);
    }

    // full stack: dense 64 -> batch norm -> dense 14 -> dense 1
    double h1[64], y[64], h2[14];
    for (std::size_t i = 0; i < 64; ++i) {
        double z = th[l.b1 + i];
        for (std::size_t j = 0; j < kFeatures; ++j) z += th[l.w1 + i * kFeatures + j] * xn[j];
        h1[i] = sigmoid(z);
    }
    for (std::size_t i = 0; i < 64; ++i) {
        const double xhat = (h1[i] - bn_mean[i]) / std::sqrt(bn_var[i] + kBnEps);
        y[i] = th[l.gamma + i] * xhat + th[l.beta + i];
    }
    for (std::size_t i = 0; i < 14; ++i) {
        double z = th[l.b2 + i];
        for (std::size_t j = 0; j < 64; ++j) z += th[l.w2 + i * 64 + j] * y[j];
        h2[i] = sigmoid(z);
    }
    double z = th[l.b3];
    for (std::size_t i = 0; i < 14; ++i) z += th[l.w3 + i] * h2[i];
    return sigmoid(z);
}

int ReadoutModel::digit(double score_value) const {
    const long d = std::lround(3.0 * score_value);
    return static_cast<int>(std::clamp(d, 0L, 3L));
}

// --- batch evaluation ----------------------------------------------------------

namespace {

struct BatchStats {
    std::array<double, 64> mean{}, var{};
};

// Mean squared error over the batch plus gradient; for the full variant the
// batch-normalization statistics are computed from this batch and reported
// so training can maintain running averages. Chunked fixed-order reductions
// keep the result independent of the thread count.
double eval_batch(const ReadoutModel& model, std::span<const Sample> samples,
                  std::span<double> grad, ExecPolicy policy, BatchStats* stats_out) {
    const Layout l = Layout::of(model.variant);
    const std::size_t n = samples.size();
    const double* th = model.theta.data();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;

    auto chunk_range = [n](std::size_t c) {
        const std::size_t lo = c * kChunk;
        return std::pair<std::size_t, std::size_t>{lo, std::min(lo + kChunk, n)};
    };

    if (model.variant != Variant::Full) {
        // single pass, no batch statistics
        std::vector<std::vector<double>> part(n_chunks, std::vector<double>(l.total, 0.0));
        std::vector<double> loss_part(n_chunks, 0.0);
        const std::size_t nh = model.variant == Variant::TwoLayer41 ? 4 : 0;

        parallel_for(n_chunks, policy, [&](std::size_t c) {
            auto [lo, hi] = chunk_range(c);
            auto& g = part[c];
            for (std::size_t s = lo; s < hi; ++s) {
                const auto xn = model.norm.apply(samples[s].features);
                double out, dh[4], h[4];
                if (model.variant == Variant::SingleLayer) {
                    double z = th[l.b1];
                    for (std::size_t j = 0; j < kFeatures; ++j) z += th[l.w1 + j] * xn[j];
                    out = sigmoid(z);
                    const double e = out - samples[s].target;
                    loss_part[c] += e * e;
                    const double dz = 2.0 * e * inv_n * out * (1.0 - out);
                    for (std::size_t j = 0; j < kFeatures; ++j) g[l.w1 + j] += dz * xn[j];
                    g[l.b1] += dz;
                } else {
                    for (std::size_t i = 0; i < nh; ++i) {
                        double z = th[l.b1 + i];
                        for (std::size_t j = 0; j < kFeatures; ++j)
                            z += th[l.w1 + i * kFeatures + j] * xn[j];
                        h[i] = sigmoid(z);
                    }
                    double z = th[l.b2];
                    for (std::size_t i = 0; i < nh; ++i) z += th[l.w2 + i] * h[i];
                    out = sigmoid(z);
                    const double e = out - samples[s].target;
                    loss_part[c] += e * e;
                    const double dz2 = 2.0 * e * inv_n * out * (1.0 - out);
                    for (std::size_t i = 0; i < nh; ++i) {
                        g[l.w2 + i] += dz2 * h[i];
                        dh[i] = dz2 * th[l.w2 + i] * h[i] * (1.0 - h[i]);
                    }
                    g[l.b2] += dz2;
                    for (std::size_t i = 0; i < nh; ++i) {
                        for (std::size_t j = 0; j < kFeatures; ++j)
                            g[l.w1 + i * kFeatures + j] += dh[i] * xn[j];
                        g[l.b1 + i] += dh[i];
                    }
                }
            }
        });
        double loss = 0;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            loss += loss_part[c];
            for (std::size_t k = 0; k < l.total; ++k) grad[k] += part[c][k];
        }
        return loss * inv_n;
    }

    // ---- full variant: three passes around the batch-norm statistics ----
    std::vector<std::array<double, 64>> xn_cache(n), h1_cache(n), dy_cache(n);

    // pass A: first dense layer, batch sums for the normalization statistics
    std::vector<std::array<double, 64>> sum_part(n_chunks), sq_part(n_chunks);
    parallel_for(n_chunks, policy, [&](std::size_t c) {
        auto [lo, hi] = chunk_range(c);
        sum_part[c].fill(0.0);
        sq_part[c].fill(0.0);
        for (std::size_t s = lo; s < hi; ++s) {
            xn_cache[s] = model.norm.apply(samples[s].features);
            for (std::size_t i = 0; i < 64; ++i) {
                double z = th[l.b1 + i];
                for (std::size_t j = 0; j < kFeatures; ++j)
                    z += th[l.w1 + i * kFeatures + j] * xn_cache[s][j];
                const double h = sigmoid(z);
                h1_cache[s][i] = h;
                sum_part[c][i] += h;
                sq_part[c][i] += h * h;
            }
        }
    });
    BatchStats stats;
    for (std::size_t i = 0; i < 64; ++i) {
        double sum = 0, sq = 0;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            sum += sum_part[c][i];
            sq += sq_part[c][i];
        }
        stats.mean[i] = sum * inv_n;
        stats.var[i] = std::max(sq * inv_n - stats.mean[i] * stats.mean[i], 0.0);
    }
    std::array<double, 64> inv_sd;
    for (std::size_t i = 0; i < 64; ++i) inv_sd[i] = 1.0 / std::sqrt(stats.var[i] + kBnEps);

    // pass B: forward through the head, backward down to the BN output
    std::vector<std::vector<double>> part(n_chunks, std::vector<double>(l.total, 0.0));
    std::vector<double> loss_part(n_chunks, 0.0);
    std::vector<std::array<double, 64>> dy_sum_part(n_chunks), dyx_sum_part(n_chunks);
    parallel_for(n_chunks, policy, [&](std::size_t c) {
        auto [lo, hi] = chunk_range(c);
        auto& g = part[c];
        dy_sum_part[c].fill(0.0);
        dyx_sum_part[c].fill(0.0);
        for (std::size_t s = lo; s < hi; ++s) {
            double y[64], h2[14];
            for (std::size_t i = 0; i < 64; ++i) {
                const double xhat = (h1_cache[s][i] - stats.mean[i]) * inv_sd[i];
                y[i] = th[l.gamma + i] * xhat + th[l.beta + i];
            }
            for (std::size_t i = 0; i < 14; ++i) {
                double z = th[l.b2 + i];
                for (std::size_t j = 0; j < 64; ++j) z += th[l.w2 + i * 64 + j] * y[j];
                h2[i] = sigmoid(z);
            }
            double z3 = th[l.b3];
            for (std::size_t i = 0; i < 14; ++i) z3 += th[l.w3 + i] * h2[i];
            const double out = sigmoid(z3);
            const double e = out - samples[s].target;
            loss_part[c] += e * e;

            const double dz3 = 2.0 * e * inv_n * out * (1.0 - out);
            double dz2[14];
            for (std::size_t i = 0; i < 14; ++i) {
                g[l.w3 + i] += dz3 * h2[i];
                dz2[i] = dz3 * th[l.w3 + i] * h2[i] * (1.0 - h2[i]);
            }
            g[l.b3] += dz3;
            for (std::size_t i = 0; i < 14; ++i) {
                for (std::size_t j = 0; j < 64; ++j) g[l.w2 + i * 64 + j] += dz2[i] * y[j];
                g[l.b2 + i] += dz2[i];
            }
            for (std::size_t j = 0; j < 64; ++j) {
                double dy = 0;
                for (std::size_t i = 0; i < 14; ++i) dy += th[l.w2 + i * 64 + j] * dz2[i];
                dy_cache[s][j] = dy;
                const double xhat = (h1_cache[s][j] - stats.mean[j]) * inv_sd[j];
                g[l.gamma + j] += dy * xhat;
                g[l.beta + j] += dy;
                dy_sum_part[c][j] += dy;
                dyx_sum_part[c][j] += dy * xhat;
            }
        }
    });
    double loss = 0;
    std::array<double, 64> dy_sum{}, dyx_sum{};
    for (std::size_t c = 0; c < n_chunks; ++c) {
        loss += loss_part[c];
        for (std::size_t j = 0; j < 64; ++j) {
            dy_sum[j] += dy_sum_part[c][j];
            dyx_sum[j] += dyx_sum_part[c][j];
        }
    }

    // pass C: batch-norm backward into the first dense layer
    parallel_for(n_chunks, policy, [&](std::size_t c) {
        auto [lo, hi] = chunk_range(c);
        auto& g = part[c];
        for (std::size_t s = lo; s < hi; ++s) {
            double dz1[64];
            for (std::size_t j = 0; j < 64; ++j) {
                const double xhat = (h1_cache[s][j] - stats.mean[j]) * inv_sd[j];
                const double dh1 = th[l.gamma + j] * inv_sd[j] *
                                   (dy_cache[s][j] - dy_sum[j] * inv_n - xhat * dyx_sum[j] * inv_n);
                dz1[j] = dh1 * h1_cache[s][j] * (1.0 - h1_cache[s][j]);
            }
            for (std::size_t i = 0; i < 64; ++i) {
                for (std::size_t j = 0; j < kFeatures; ++j)
                    g[l.w1 + i * kFeatures + j] += dz1[i] * xn_cache[s][j];
                g[l.b1 + i] += dz1[i];
            }
        }
    });
    for (std::size_t c = 0; c < n_chunks; ++c)
        for (std::size_t k = 0; k < l.total; ++k) grad[k] += part[c][k];

    if (stats_out) *stats_out = stats;
    return loss * inv_n;
}

}  // namespace

double loss_and_grad(const ReadoutModel& model, std::span<const Sample> samples,
                     std::span<double> grad_out, ExecPolicy policy) {
    return eval_batch(model, samples, grad_out, policy, nullptr);
}

// --- training --------------------------------------------------------------------

ReadoutModel train(std::span<const Sample> samples, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("training requires epochs >= 1");
    if (!(cfg.lr > 0)) throw std::invalid_argument("learning rate must be positive");
    if (samples.size() < 8) throw std::invalid_argument("training requires >= 8 samples");
    bool seen[4] = {false, false, false, false};
    for (const auto& s : samples) {
        if (s.label < 0 || s.label > 3) throw std::invalid_argument("labels must be 0..3");
        seen[s.label] = true;
    }
    if (!(seen[0] && seen[1] && seen[2] && seen[3]))
        throw std::invalid_argument("training set must span all labels 0..3");

    ReadoutModel model;
    model.variant = cfg.variant;
    model.norm.fit(samples);
    const Layout l = Layout::of(cfg.variant);
    model.theta.assign(l.total, 0.0);
    model.bn_mean.fill(0.0);
    model.bn_var.fill(1.0);

    // Seeded uniform init, gains start at identity.
    SplitMix64 rng(cfg.seed ^ 0x5eed5eedULL);
    auto init_dense = [&](std::size_t off, std::size_t rows, std::size_t cols) {
        const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (std::size_t k = 0; k < rows * cols; ++k)
            model.theta[off + k] = rng.next_in(-lim, lim);
    };
    switch (cfg.variant) {
        case Variant::Full:
            init_dense(l.w1, 64, kFeatures);
            for (std::size_t i = 0; i < 64; ++i) model.theta[l.gamma + i] = 1.0;
            init_dense(l.w2, 14, 64);
            init_dense(l.w3, 1, 14);
            break;
        case Variant::SingleLayer:
            init_dense(l.w1, 1, kFeatures);
            break;
        case Variant::TwoLayer41:
            init_dense(l.w1, 4, kFeatures);
            init_dense(l.w2, 1, 4);
            break;
    }

    std::vector<double> grad(l.total), m(l.total, 0.0), v(l.total, 0.0);
    const std::size_t batch = cfg.batch_size > 0
                                  ? std::min<std::size_t>(cfg.batch_size, samples.size())
                                  : samples.size();
    std::size_t adam_t = 0;
    double last_loss = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t off = 0; off < samples.size(); off += batch) {
            const auto slice = samples.subspan(off, std::min(batch, samples.size() - off));
            BatchStats stats;
            last_loss = eval_batch(model, slice, grad, cfg.policy,
                                   cfg.variant == Variant::Full ? &stats : nullptr);
            if (!std::isfinite(last_loss))
                throw DivergedTraining(static_cast<std::size_t>(epoch));
            if (cfg.variant == Variant::Full) {
                for (std::size_t i = 0; i < 64; ++i) {
                    model.bn_mean[i] = kBnMomentum * model.bn_mean[i] +
                                       (1.0 - kBnMomentum) * stats.mean[i];
                    model.bn_var[i] = kBnMomentum * model.bn_var[i] +
                                      (1.0 - kBnMomentum) * stats.var[i];
                }
            }
            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
            for (std::size_t k = 0; k < l.total; ++k) {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                model.theta[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
        }
    }

    // Final metrics with the frozen model over the whole set.
    double loss = 0;
    for (const auto& s : samples) {
        const double e = model.score(s.features) - s.target;
        loss += e * e;
    }
    loss /= static_cast<double>(samples.size());
    model.metrics.final_loss = loss;
    model.metrics.rmse = std::sqrt(loss);
    model.metrics.epochs = cfg.epochs;
    (void)last_loss;
    return model;
}

// --- model file ----------------------------------------------------------------------

namespace {

constexpr std::array<unsigned char, 8> kModelMagic = {'F', 'F', 'R', 'C', 'M', 'D', 'L', 1};

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

void ReadoutModel::save_file(const std::string& path) const {
    std::string out;
    out.append(reinterpret_cast<const char*>(kModelMagic.data()), kModelMagic.size());
    put_u32(out, static_cast<std::uint32_t>(variant));
    const Layout l = Layout::of(variant);
    put_u32(out, static_cast<std::uint32_t>(l.total));
    for (double d : norm.lo) put_f64(out, d);
    for (double d : norm.hi) put_f64(out, d);
    for (double d : theta) put_f64(out, d);
    for (double d : bn_mean) put_f64(out, d);
    for (double d : bn_var) put_f64(out, d);
    put_f64(out, metrics.final_loss);
    put_f64(out, metrics.rmse);
    put_u32(out, static_cast<std::uint32_t>(metrics.epochs));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write model file: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

ReadoutModel ReadoutModel::load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ModelNotFound(path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    const std::size_t n = data.size();
    if (n < 16 || std::memcmp(p, kModelMagic.data(), kModelMagic.size()) != 0)
        throw ModelFormatError("bad magic");
    ReadoutModel model;
    model.variant = static_cast<Variant>(get_u32(p + 8));
    const Layout l = Layout::of(model.variant);
    const std::size_t total = get_u32(p + 12);
    if (total != l.total) throw ModelFormatError("parameter count mismatch");
    const std::size_t need = 16 + 8 * (kFeatures * 2 + total + 64 * 2 + 2) + 4;
    if (n != need) throw ModelFormatError("truncated model file");
    std::size_t off = 16;
    auto next = [&]() {
        const double d = get_f64(p + off);
        off += 8;
        return d;
    };
    for (auto& d : model.norm.lo) d = next();
    for (auto& d : model.norm.hi) d = next();
    model.theta.resize(total);
    for (auto& d : model.theta) d = next();
    for (auto& d : model.bn_mean) d = next();
    for (auto& d : model.bn_var) d = next();
    model.metrics.final_loss = next();
    model.metrics.rmse = next();
    model.metrics.epochs = static_cast<int>(get_u32(p + off));
    return model;
}

}  // namespace ffl::nn
