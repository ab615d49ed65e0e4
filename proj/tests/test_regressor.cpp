#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "test_util.hpp"
#include "thermoface/errors.hpp"
#include "thermoface/net.hpp"
#include "thermoface/train.hpp"

using namespace thermoface;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& v : t.data) v = dist(rng);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        s += static_cast<double>(a.data[i]) * b.data[i];
    return s;
}

// The tiniest spec the constraints allow; small enough for per-parameter
// finite differences.
NetworkSpec tiny_spec() {
    NetworkSpec s;
    s.input_size = 8;
    s.input_channels = 1;
    s.stem_channels = 2;
    s.encoder_residual_blocks = 1;
    s.decoder_transposed_blocks = 2;
    return s;
}

}  // namespace

TEST_CASE("conv_forward") {
    SUBCASE("stride 1 keeps and stride 2 halves the spatial size") {
        const Tensor x = random_tensor({3, 8, 6}, 1);
        const Tensor w = random_tensor({5, 3, 4, 4}, 2);
        const std::vector<float> b(5, 0.0f);
        const Tensor y1 = conv_forward(x, w, b, 1);
        CHECK(y1.shape == std::vector<int>{5, 8, 6});
        const Tensor y2 = conv_forward(x, w, b, 2);
        CHECK(y2.shape == std::vector<int>{5, 4, 3});
    }
    SUBCASE("kernel impulse at (1,1) is the identity") {
        const Tensor x = random_tensor({1, 5, 5}, 3);
        Tensor w({1, 1, 4, 4});
        w.data[1 * 4 + 1] = 1.0f;
        const Tensor y = conv_forward(x, w, {0.0f}, 1);
        for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);
    }
    SUBCASE("kernel impulse at (2,1) shifts the image up") {
        const Tensor x = random_tensor({1, 5, 5}, 4);
        Tensor w({1, 1, 4, 4});
        w.data[2 * 4 + 1] = 1.0f;
        const Tensor y = conv_forward(x, w, {0.0f}, 1);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 5; ++c) CHECK(y.data[r * 5 + c] == x.data[(r + 1) * 5 + c]);
        for (int c = 0; c < 5; ++c) CHECK(y.data[4 * 5 + c] == 0.0f);  // zero padding
    }
    SUBCASE("all-ones kernel on a constant image counts in-bounds taps") {
        Tensor x({1, 4, 4});
        for (float& v : x.data) v = 1.0f;
        Tensor w({1, 1, 4, 4});
        for (float& v : w.data) v = 1.0f;
        const Tensor y = conv_forward(x, w, {0.5f}, 2);
        // every stride-2 window covers a 3x3 in-bounds region
        for (float v : y.data) CHECK(v == doctest::Approx(9.5f));
    }
    SUBCASE("stride 2 on odd sizes rejected") {
        const Tensor x = random_tensor({1, 5, 4}, 5);
        const Tensor w = random_tensor({1, 1, 4, 4}, 6);
        CHECK_THROWS_AS(conv_forward(x, w, {0.0f}, 2), InvalidArgument);
        CHECK_THROWS_AS(conv_forward(x, w, {0.0f}, 3), InvalidArgument);
    }
}

TEST_CASE("conv_transpose_forward") {
    SUBCASE("stride doubles or keeps the spatial size") {
        const Tensor x = random_tensor({4, 3, 5}, 7);
        const Tensor w = random_tensor({4, 2, 4, 4}, 8);
        const std::vector<float> b(2, 0.0f);
        CHECK(conv_transpose_forward(x, w, b, 1).shape == std::vector<int>{2, 3, 5});
        CHECK(conv_transpose_forward(x, w, b, 2).shape == std::vector<int>{2, 6, 10});
    }
    SUBCASE("is the exact adjoint of conv_forward") {
        // <tconv(x, w), z> == <x, conv(z, w)> for all x, z
        for (int stride : {1, 2}) {
            const Tensor x = random_tensor({3, 4, 4}, 20 + stride);
            const Tensor w = random_tensor({3, 2, 4, 4}, 22 + stride);
            const Tensor z = random_tensor({2, 4 * stride, 4 * stride}, 24 + stride);
            const Tensor tx = conv_transpose_forward(x, w, std::vector<float>(2, 0.0f), stride);
            const Tensor cz = conv_forward(z, w, std::vector<float>(3, 0.0f), stride);
            CHECK(dot(tx, z) == doctest::Approx(dot(x, cz)).epsilon(1e-4));
        }
    }
}

TEST_CASE("residual_block_forward") {
    SUBCASE("zero weights with identity skip return the input") {
        const Tensor x = random_tensor({4, 6, 6}, 30);
        ResidualBlockWeights rw;
        rw.w1 = Tensor({4, 4, 4, 4});
        rw.b1.assign(4, 0.0f);
        rw.w2 = Tensor({4, 4, 4, 4});
        rw.b2.assign(4, 0.0f);
        const Tensor y = residual_block_forward(x, rw, 1);
        CHECK(y.data == x.data);
    }
    SUBCASE("matches a composition of the public primitives") {
        const Tensor x = random_tensor({2, 8, 8}, 31);
        ResidualBlockWeights rw;
        rw.w1 = random_tensor({3, 2, 4, 4}, 32, -0.3f, 0.3f);
        rw.b1 = {0.1f, -0.2f, 0.05f};
        rw.w2 = random_tensor({3, 3, 4, 4}, 33, -0.3f, 0.3f);
        rw.b2 = {0.0f, 0.3f, -0.1f};
        rw.w_proj = random_tensor({3, 2, 1, 1}, 34);
        rw.b_proj = {0.02f, 0.0f, -0.01f};
        const Tensor y = residual_block_forward(x, rw, 2);

        Tensor h1 = conv_forward(x, rw.w1, rw.b1, 2);
        for (float& v : h1.data) v = std::max(v, 0.0f);
        const Tensor main = conv_forward(h1, rw.w2, rw.b2, 1);
        // 1x1 stride-2 projection: channel mix of the even-grid samples
        CHECK(y.shape == std::vector<int>{3, 4, 4});
        for (int oc = 0; oc < 3; ++oc)
            for (int oy = 0; oy < 4; ++oy)
                for (int ox = 0; ox < 4; ++ox) {
                    float skip = rw.b_proj[oc];
                    for (int ic = 0; ic < 2; ++ic)
                        skip += rw.w_proj.data[oc * 2 + ic] * x.data[(ic * 8 + 2 * oy) * 8 + 2 * ox];
                    const std::size_t i = (static_cast<std::size_t>(oc) * 4 + oy) * 4 + ox;
                    CHECK(y.data[i] == doctest::Approx(main.data[i] + skip).epsilon(1e-5));
                }
    }
    SUBCASE("identity skip with mismatched shape rejected") {
        const Tensor x = random_tensor({2, 6, 6}, 35);
        ResidualBlockWeights rw;
        rw.w1 = Tensor({3, 2, 4, 4});
        rw.b1.assign(3, 0.0f);
        rw.w2 = Tensor({3, 3, 4, 4});
        rw.b2.assign(3, 0.0f);
        CHECK_THROWS_AS(residual_block_forward(x, rw, 1), InvalidArgument);
    }
}

TEST_CASE("NetworkSpec and Network") {
    SUBCASE("tiny spec has the analytic parameter count") {
        // stem 1->2 (34), res 2->4 s2 (132 + 260 + proj 12), tconv 4->4 (260),
        // tconv 4->3 (195)
        Network net(tiny_spec());
        CHECK(net.parameter_count() == 34 + 132 + 260 + 12 + 260 + 195);
    }
    SUBCASE("default channel derivation doubles then caps") {
        NetworkSpec s;
        s.input_size = 32;
        s.stem_channels = 8;
        s.encoder_residual_blocks = 4;
        s.decoder_transposed_blocks = 5;
        s.validate_and_fill();
        CHECK(s.encoder_channels == std::vector<int>{16, 16, 32, 32});
        CHECK(s.decoder_channels.back() == 3);
        CHECK(s.decoder_channels.size() == 5);
    }
    SUBCASE("flatten/load round trip") {
        Network net(tiny_spec());
        net.init_parameters(99);
        const std::vector<float> flat = net.flatten_parameters();
        Network other(tiny_spec());
        other.load_parameters(flat);
        CHECK(other.flatten_parameters() == flat);
        CHECK_THROWS_AS(other.load_parameters(std::vector<float>(flat.size() - 1)),
                        InvalidArgument);
    }
    SUBCASE("init is seeded and bounded by the Xavier limit") {
        Network a(tiny_spec()), b(tiny_spec());
        a.init_parameters(7);
        b.init_parameters(7);
        CHECK(a.flatten_parameters() == b.flatten_parameters());
        b.init_parameters(8);
        CHECK(a.flatten_parameters() != b.flatten_parameters());
        const double bound = std::sqrt(6.0 / (1 * 16 + 2 * 16));  // stem layer
        for (std::size_t i = 0; i < a.weights[0].size(); ++i)
            CHECK(std::abs(a.weights[0].data[i]) <= bound);
    }
    SUBCASE("invalid specs rejected") {
        NetworkSpec s = tiny_spec();
        s.input_size = 6;
        s.encoder_residual_blocks = 3;  // two halvings, 6 % 4 != 0
        CHECK_THROWS_AS(s.validate_and_fill(), InvalidArgument);
        NetworkSpec few = tiny_spec();
        few.decoder_transposed_blocks = 0;
        CHECK_THROWS_AS(few.validate_and_fill(), InvalidArgument);
    }
    SUBCASE("forward restores the input resolution for random specs") {
        std::mt19937_64 rng(55);
        for (int trial = 0; trial < 6; ++trial) {
            NetworkSpec s;
            s.input_size = 8 << (rng() % 2);
            s.input_channels = (trial % 2) ? 3 : 1;
            s.stem_channels = 2 + static_cast<int>(rng() % 3);
            s.encoder_residual_blocks = 1 + static_cast<int>(rng() % 3);
            s.decoder_transposed_blocks =
                (s.encoder_residual_blocks + 1) / 2 + static_cast<int>(rng() % 2) + 1;
            Network net(s);
            net.init_parameters(100 + trial);
            const Image img = test_util::random_image(s.input_size, s.input_size,
                                                      s.input_channels, 200 + trial);
            const PositionMap pm = forward(net, img);
            CHECK(pm.width == s.input_size);
            CHECK(pm.height == s.input_size);
        }
    }
    SUBCASE("forward is deterministic and size-checked") {
        Network net(tiny_spec());
        net.init_parameters(1);
        const Image img = test_util::random_image(8, 8, 1, 300);
        CHECK(forward(net, img).data == forward(net, img).data);
        CHECK_THROWS_AS(forward(net, test_util::random_image(16, 16, 1, 301)), InvalidArgument);
    }
}

TEST_CASE("weighted_loss") {
    SUBCASE("single texel with a 3-4-0 residual and weight 2 gives 10") {
        PositionMap pred(1, 1), gt(1, 1);
        pred.at(0, 0, 0) = 3.0f;
        pred.at(0, 0, 1) = 4.0f;
        WeightMask mask(1, 1, 2.0f);
        CHECK(weighted_loss(pred, gt, mask) == doctest::Approx(10.0).epsilon(1e-9));
        CHECK(weighted_loss(pred, gt, mask, true) == doctest::Approx(50.0).epsilon(1e-9));
    }
    SUBCASE("perfect prediction costs only the epsilon floor") {
        PositionMap p(4, 4);
        WeightMask mask(4, 4, 1.0f);
        CHECK(weighted_loss(p, p, mask) == doctest::Approx(16 * 1e-6).epsilon(1e-6));
        CHECK(weighted_loss(p, p, mask, true) == 0.0);
    }
    SUBCASE("zero weight silences a texel") {
        PositionMap pred(2, 1), gt(2, 1);
        pred.at(0, 0, 2) = 5.0f;
        pred.at(1, 0, 2) = 7.0f;
        WeightMask mask(2, 1, 0.0f);
        mask.at(1, 0) = 1.0f;
        CHECK(weighted_loss(pred, gt, mask) == doctest::Approx(7.0).epsilon(1e-9));
    }
    SUBCASE("resolution mismatch rejected") {
        CHECK_THROWS_AS(weighted_loss(PositionMap(2, 2), PositionMap(3, 2), WeightMask(2, 2)),
                        InvalidArgument);
    }
}

TEST_CASE("backward") {
    SUBCASE("matches central finite differences on every parameter") {
        // Central differences are only a valid oracle away from the ReLU
        // kinks, so the parameters are built to keep every pre-activation
        // strictly positive within the probe radius: small weights, +0.5
        // biases. The chain rule itself is exercised in full.
        for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
            const bool squared = seed % 2 == 0;
            Network net(tiny_spec());
            std::mt19937_64 rng(seed);
            std::vector<float> params(net.parameter_count());
            std::size_t pos = 0;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                const float fan = static_cast<float>(net.weights[l].size() / net.biases[l].size());
                std::uniform_real_distribution<float> wdist(-0.25f / fan, 0.25f / fan);
                for (std::size_t j = 0; j < net.weights[l].size(); ++j) params[pos++] = wdist(rng);
                for (std::size_t j = 0; j < net.biases[l].size(); ++j) params[pos++] = 0.5f;
            }
            net.load_parameters(params);
            const Image img = test_util::random_image(8, 8, 1, 400 + seed, 0.1f, 0.9f);
            // unit-scale residual everywhere keeps the sqrt loss smooth
            PositionMap gt = forward(net, img);
            for (float& v : gt.data) v -= 1.0f;
            WeightMask mask(8, 8);
            std::uniform_real_distribution<float> mdist(0.5f, 2.0f);
            for (float& v : mask.data) v = mdist(rng);

            const Gradients g = backward(net, img, gt, mask, squared);
            CHECK(g.loss == doctest::Approx(weighted_loss(forward(net, img), gt, mask, squared))
                                .epsilon(1e-6));

            REQUIRE(g.flat.size() == params.size());
            // roundoff-limited: larger probes average out float noise
            const float h = 2e-2f;
            double max_rel = 0.0;
            for (std::size_t i = 0; i < params.size(); ++i) {
                const float saved = params[i];
                params[i] = saved + h;
                net.load_parameters(params);
                const double lp = weighted_loss(forward(net, img), gt, mask, squared);
                params[i] = saved - h;
                net.load_parameters(params);
                const double lm = weighted_loss(forward(net, img), gt, mask, squared);
                params[i] = saved;
                const double numeric = (lp - lm) / (2.0 * h);
                const double analytic = g.flat[i];
                max_rel = std::max(max_rel, std::abs(analytic - numeric) /
                                                std::max(1.0, std::abs(analytic) + std::abs(numeric)));
            }
            net.load_parameters(params);
            CHECK(max_rel < 1e-4);
        }
    }
    SUBCASE("a dead ReLU channel gets exactly zero gradient") {
        Network net(tiny_spec());
        net.init_parameters(13);
        std::vector<float> params = net.flatten_parameters();
        params[32] = -100.0f;  // stem bias, channel 0: activation is 0 everywhere
        net.load_parameters(params);
        const Image img = test_util::random_image(8, 8, 1, 420, 0.1f, 0.9f);
        PositionMap gt(8, 8);
        for (std::size_t i = 0; i < gt.data.size(); ++i) gt.data[i] = 0.2f * (i % 5);
        const Gradients g = backward(net, img, gt, WeightMask(8, 8, 1.0f));
        // stem weights feeding channel 0 and its bias
        for (int i = 0; i < 16; ++i) CHECK(g.flat[i] == 0.0f);
        CHECK(g.flat[32] == 0.0f);
        // res_conv1 weights reading the dead channel: w1 is [4, 2, 4, 4]
        for (int oc = 0; oc < 4; ++oc)
            for (int k = 0; k < 16; ++k) CHECK(g.flat[34 + (oc * 2 + 0) * 16 + k] == 0.0f);
    }
    SUBCASE("gradient is linear in the mask") {
        Network net(tiny_spec());
        net.init_parameters(11);
        const Image img = test_util::random_image(8, 8, 1, 410, 0.1f, 0.9f);
        PositionMap gt(8, 8);
        for (std::size_t i = 0; i < gt.data.size(); ++i) gt.data[i] = 0.1f * (i % 7);
        WeightMask mask(8, 8, 1.0f), mask2(8, 8, 2.0f);
        const Gradients a = backward(net, img, gt, mask);
        const Gradients b = backward(net, img, gt, mask2);
        CHECK(b.loss == doctest::Approx(2.0 * a.loss).epsilon(1e-6));
        for (std::size_t i = 0; i < a.flat.size(); ++i)
            CHECK(b.flat[i] == doctest::Approx(2.0f * a.flat[i]).epsilon(1e-3));
    }
    SUBCASE("zero mask kills the gradient") {
        Network net(tiny_spec());
        net.init_parameters(12);
        const Image img = test_util::random_image(8, 8, 1, 411);
        const Gradients g = backward(net, img, PositionMap(8, 8), WeightMask(8, 8, 0.0f));
        CHECK(g.loss == 0.0);
        for (float v : g.flat) CHECK(v == 0.0f);
    }
}

TEST_CASE("training") {
    SUBCASE("synthetic dataset is deterministic and well-formed") {
        const auto a = make_synthetic_dataset(3, 16, 9);
        const auto b = make_synthetic_dataset(3, 16, 9);
        REQUIRE(a.size() == 3);
        for (std::size_t s = 0; s < 3; ++s) {
            CHECK(a[s].image.width == 16);
            CHECK(a[s].gt.width == 16);
            CHECK(a[s].mask.width == 16);
            CHECK(a[s].image.data == b[s].image.data);
            CHECK(a[s].gt.data == b[s].gt.data);
            // x/y planes carry pixel coordinates
            CHECK(a[s].gt.at(5, 9, 0) == 5.0f);
            CHECK(a[s].gt.at(5, 9, 1) == 9.0f);
        }
        CHECK(make_synthetic_dataset(2, 16, 9)[0].image.data != make_synthetic_dataset(2, 16, 10)[0].image.data);
        CHECK_THROWS_AS(make_synthetic_dataset(0, 16, 1), InvalidArgument);
    }
    SUBCASE("overfits a single sample by at least 90 percent") {
        NetworkSpec s = tiny_spec();
        s.input_size = 16;
        Network net(s);
        const auto data = make_synthetic_dataset(1, 16, 21);
        TrainConfig cfg;
        cfg.learning_rate = 1e-5;
        const std::vector<double> curve = train(net, data, cfg);
        REQUIRE(curve.size() == static_cast<std::size_t>(cfg.iterations));
        CHECK(curve.back() <= 0.1 * curve.front());
    }
    SUBCASE("same seed gives a bitwise identical run") {
        NetworkSpec s = tiny_spec();
        Network a(s), b(s);
        const auto data = make_synthetic_dataset(2, 8, 22);
        TrainConfig cfg;
        cfg.iterations = 10;
        const auto ca = train(a, data, cfg);
        const auto cb = train(b, data, cfg);
        CHECK(ca == cb);
        CHECK(a.flatten_parameters() == b.flatten_parameters());
    }
    SUBCASE("bad configs rejected") {
        TrainConfig cfg;
        cfg.learning_rate = 0.0;
        CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
        cfg.learning_rate = 1e-4;
        cfg.iterations = 0;
        CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    }
    SUBCASE("checkpoint round trip") {
        const std::string path = (std::filesystem::temp_directory_path() / "tf_ckpt_test.tprn").string();
        Network net(tiny_spec());
        net.init_parameters(33);
        save_checkpoint(net, path);
        const Network back = load_checkpoint(path);
        CHECK(back.spec.input_size == net.spec.input_size);
        CHECK(back.spec.encoder_channels == net.spec.encoder_channels);
        CHECK(back.flatten_parameters() == net.flatten_parameters());
        // corrupting the magic makes it unreadable
        {
            std::ofstream f(path, std::ios::binary | std::ios::in | std::ios::out);
            f.write("XXXX", 4);
        }
        CHECK_THROWS_AS(load_checkpoint(path), UnsupportedFormatError);
        std::remove(path.c_str());
        CHECK_THROWS_AS(load_checkpoint(path), Error);
    }
}

TEST_CASE("default_weight_mask") {
    const WeightMask m = default_weight_mask(256, 256);
    SUBCASE("only the four documented levels appear") {
        for (float v : m.data) CHECK((v == 0.0f || v == 3.0f || v == 4.0f || v == 16.0f));
    }
    SUBCASE("all levels are actually present with background dominating the border") {
        int counts[4] = {0, 0, 0, 0};
        for (float v : m.data) {
            if (v == 0.0f) ++counts[0];
            if (v == 3.0f) ++counts[1];
            if (v == 4.0f) ++counts[2];
            if (v == 16.0f) ++counts[3];
        }
        for (int c : counts) CHECK(c > 0);
        CHECK(counts[0] > 256 * 256 / 4);  // face ellipse leaves the corners empty
        CHECK(m.at(0, 0) == 0.0f);
        CHECK(m.at(128, 128) > 0.0f);
    }
    SUBCASE("resampling preserves the level set") {
        const WeightMask small = default_weight_mask(64, 64);
        CHECK(small.width == 64);
        for (float v : small.data) CHECK((v == 0.0f || v == 3.0f || v == 4.0f || v == 16.0f));
        CHECK(small.at(32, 32) == m.at(128, 128));
    }
}
