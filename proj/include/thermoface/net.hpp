#ifndef THERMOFACE_NET_HPP
#define THERMOFACE_NET_HPP

#include <cstdint>
#include <vector>

#include "thermoface/image.hpp"
#include "thermoface/posmap.hpp"

namespace thermoface {

// Dense row-major float array, single-sample CHW for feature maps and
// [out_c, in_c, k, k] for convolution weights.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_);
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data.size(); }
};

// Kernel-4 cross-correlation with the zero padding that keeps (stride 1) or
// exactly halves (stride 2) the spatial size. Weights [out_c, in_c, 4, 4].
Tensor conv_forward(const Tensor& x, const Tensor& w, const std::vector<float>& bias, int stride);

// Adjoint of conv_forward: keeps (stride 1) or exactly doubles (stride 2)
// the spatial size. Weights [in_c, out_c, 4, 4].
Tensor conv_transpose_forward(const Tensor& x, const Tensor& w, const std::vector<float>& bias,
                              int stride);

// conv1 (ReLU) then conv2, plus an identity or 1x1-projected skip.
// The first conv carries the block's stride.
struct ResidualBlockWeights {
    Tensor w1;                  // [out_c, in_c, 4, 4]
    std::vector<float> b1;
    Tensor w2;                  // [out_c, out_c, 4, 4]
    std::vector<float> b2;
    Tensor w_proj;              // [out_c, in_c, 1, 1]; empty when the skip is identity
    std::vector<float> b_proj;
};

Tensor residual_block_forward(const Tensor& x, const ResidualBlockWeights& weights, int stride);

// Encoder of one stem conv plus residual blocks (strides alternate 2,1,2,...),
// decoder of transposed-conv blocks (the first ceil(res/2) carry stride 2),
// kernel 4, ReLU everywhere except the linear final layer.
struct NetworkSpec {
    int input_size = 32;
    int input_channels = 3;
    int stem_channels = 8;
    int encoder_residual_blocks = 2;
    int decoder_transposed_blocks = 5;
    std::vector<int> encoder_channels;  // per block; defaulted when empty
    std::vector<int> decoder_channels;  // per block, last must be 3; defaulted when empty

    // Fills defaulted channel lists and checks the spatial round trip.
    void validate_and_fill();
    int spatial_halvings() const { return (encoder_residual_blocks + 1) / 2; }
};

struct Network {
    NetworkSpec spec;
    std::vector<Tensor> weights;             // one per conv layer, in layer order
    std::vector<std::vector<float>> biases;  // matching layer order

    explicit Network(NetworkSpec spec_);

    std::size_t parameter_count() const;
    // Uniform +-sqrt(6/(fan_in+fan_out)) init, seeded.
    void init_parameters(std::uint64_t seed);
    std::vector<float> flatten_parameters() const;
    void load_parameters(const std::vector<float>& flat);
};

PositionMap forward(const Network& net, const Image& img);

// Sum over texels of W * sqrt(|pred - gt|^2 + eps); squared variant drops
// the square root.
double weighted_loss(const PositionMap& pred, const PositionMap& gt, const WeightMask& mask,
                     bool squared = false);

struct Gradients {
    std::vector<float> flat;  // aligned with Network::flatten_parameters
    double loss = 0.0;
};

Gradients backward(const Network& net, const Image& img, const PositionMap& gt,
                   const WeightMask& mask, bool squared = false);

}  // namespace thermoface

#endif
