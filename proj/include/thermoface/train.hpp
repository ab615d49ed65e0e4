#ifndef THERMOFACE_TRAIN_HPP
#define THERMOFACE_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "thermoface/image.hpp"
#include "thermoface/net.hpp"
#include "thermoface/posmap.hpp"

namespace thermoface {

struct TrainConfig {
    double learning_rate = 1e-6;
    int iterations = 500;
    std::uint64_t seed = 1;
    bool momentum = true;  // momentum(0.9), otherwise plain gradient descent
    bool squared_loss = false;

    void validate() const;
};

struct TrainSample {
    Image image;
    PositionMap gt;
    WeightMask mask;
};

// Analytic face-like ellipsoid height fields rendered to images with their
// ground-truth position maps; no external dataset needed.
std::vector<TrainSample> make_synthetic_dataset(int count, int size, std::uint64_t seed);

// Full-batch gradient descent; returns the per-iteration loss curve.
// Deterministic given the seed (which also drives parameter init).
std::vector<double> train(Network& net, const std::vector<TrainSample>& dataset,
                          const TrainConfig& cfg);

// "TPRN" checkpoint: magic, u32 spec header, u64 parameter count,
// little-endian float32 parameters in layer order.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace thermoface

#endif
