#include "thermoface/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "thermoface/errors.hpp"

namespace thermoface {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw InvalidArgument("TrainConfig: learning_rate must be positive");
    if (iterations < 1) throw InvalidArgument("TrainConfig: iterations must be at least 1");
}

std::vector<TrainSample> make_synthetic_dataset(int count, int size, std::uint64_t seed) {
    if (count < 1 || size < 4) throw InvalidArgument("make_synthetic_dataset: bad count or size");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.06, 0.06);
    std::uniform_real_distribution<double> zdist(0.25, 0.45);
    std::normal_distribution<double> noise(0.0, 0.01);

    std::vector<TrainSample> out;
    const WeightMask mask = default_weight_mask(size, size);
    for (int s = 0; s < count; ++s) {
        const double cx = size * (0.5 + jitter(rng));
        const double cy = size * (0.5 + jitter(rng));
        const double rx = size * (0.34 + jitter(rng) * 0.5);
        const double ry = size * (0.44 + jitter(rng) * 0.5);
        const double z_scale = size * zdist(rng);

        TrainSample sample;
        sample.gt = PositionMap(size, size);
        sample.image = Image(size, size, 1);
        sample.mask = mask;
        for (int v = 0; v < size; ++v)
            for (int u = 0; u < size; ++u) {
                const double dx = (u - cx) / rx, dy = (v - cy) / ry;
                const double dome = 1.0 - dx * dx - dy * dy;
                const double z = dome > 0.0 ? z_scale * std::sqrt(dome) : 0.0;
                sample.gt.at(u, v, 0) = static_cast<float>(u);
                sample.gt.at(u, v, 1) = static_cast<float>(v);
                sample.gt.at(u, v, 2) = static_cast<float>(z);
                const double shade = z / z_scale;
                sample.image.at(u, v, 0) =
                    static_cast<float>(std::clamp(0.15 + 0.75 * shade + noise(rng), 0.0, 1.0));
            }
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<double> train(Network& net, const std::vector<TrainSample>& dataset,
                          const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw InvalidArgument("train: empty dataset");
    net.init_parameters(cfg.seed);

    std::vector<float> params = net.flatten_parameters();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> curve;
    curve.reserve(cfg.iterations);

    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<double> grad(params.size(), 0.0);
        double loss = 0.0;
        for (const TrainSample& s : dataset) {
            const Gradients g = backward(net, s.image, s.gt, s.mask, cfg.squared_loss);
            loss += g.loss;
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g.flat[i];
        }
        const double inv_n = 1.0 / static_cast<double>(dataset.size());
        loss *= inv_n;
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at iteration " + std::to_string(it));
        curve.push_back(loss);

        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i] * inv_n;
            if (cfg.momentum) {
                velocity[i] = 0.9 * velocity[i] + g;
                params[i] = static_cast<float>(params[i] - cfg.learning_rate * velocity[i]);
            } else {
                params[i] = static_cast<float>(params[i] - cfg.learning_rate * g);
            }
        }
        net.load_parameters(params);
    }
    return curve;
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    std::uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw TruncatedStreamError("checkpoint: short read");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path);
    f.write("TPRN", 4);
    const NetworkSpec& s = net.spec;
    put_u32(f, static_cast<std::uint32_t>(s.input_size));
    put_u32(f, static_cast<std::uint32_t>(s.input_channels));
    put_u32(f, static_cast<std::uint32_t>(s.stem_channels));
    put_u32(f, static_cast<std::uint32_t>(s.encoder_residual_blocks));
    put_u32(f, static_cast<std::uint32_t>(s.decoder_transposed_blocks));
    for (int c : s.encoder_channels) put_u32(f, static_cast<std::uint32_t>(c));
    for (int c : s.decoder_channels) put_u32(f, static_cast<std::uint32_t>(c));
    const std::vector<float> params = net.flatten_parameters();
    put_u32(f, static_cast<std::uint32_t>(params.size() & 0xffffffffu));
    put_u32(f, static_cast<std::uint32_t>(params.size() >> 32));
    for (float v : params) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(f, bits);
    }
    if (!f) throw Error("short write to " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TPRN", 4) != 0)
        throw UnsupportedFormatError("checkpoint: bad magic in " + path);
    NetworkSpec s;
    s.input_size = static_cast<int>(get_u32(f));
    s.input_channels = static_cast<int>(get_u32(f));
    s.stem_channels = static_cast<int>(get_u32(f));
    s.encoder_residual_blocks = static_cast<int>(get_u32(f));
    s.decoder_transposed_blocks = static_cast<int>(get_u32(f));
    if (s.encoder_residual_blocks > 1024 || s.decoder_transposed_blocks > 1024)
        throw DimensionOverflowError("checkpoint: implausible block counts");
    for (int i = 0; i < s.encoder_residual_blocks; ++i)
        s.encoder_channels.push_back(static_cast<int>(get_u32(f)));
    for (int i = 0; i < s.decoder_transposed_blocks; ++i)
        s.decoder_channels.push_back(static_cast<int>(get_u32(f)));
    Network net(s);
    const std::uint64_t lo = get_u32(f);
    const std::uint64_t hi = get_u32(f);
    const std::uint64_t count = lo | (hi << 32);
    if (count != net.parameter_count())
        throw UnsupportedFormatError("checkpoint: parameter count does not match the spec header");
    std::vector<float> params(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(f);
        std::memcpy(&params[i], &bits, 4);
    }
    net.load_parameters(params);
    return net;
}

}  // namespace thermoface
