#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invrom/invnet.hpp"
#include "support/oracles.hpp"

using namespace invrom;

namespace {

void zero_params(InvertibleNet& net) {
    std::vector<Tensor*> params;
    net.collect_params(params);
    for (Tensor* p : params) std::fill(p->data.begin(), p->data.end(), 0.0);
}

/// Sets every t-subnet to output the constant c and every s-subnet to 0.
void make_translation(InvertibleNet& net, double c) {
    zero_params(net);
    for (auto& layer : net.layers()) {
        for (Mlp* t : {&layer.t1, &layer.t2})
            std::fill(t->layers.back().bias.data.begin(),
                      t->layers.back().bias.data.end(), c);
    }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace

TEST_CASE("clamped exponential values and bounds") {
    auto out = clamped_exp({0.0, 1.0, 1e9, -1e9});
    CHECK(out[0] == 1.0);
    CHECK(out[1] == doctest::Approx(std::exp(M_PI / 4.0)).epsilon(1e-15));
    CHECK(out[2] == doctest::Approx(std::exp(M_PI / 2.0)).epsilon(1e-9));
    const double lo = std::exp(-M_PI / 2.0), hi = std::exp(M_PI / 2.0);
    CHECK(out[2] < hi);
    CHECK(out[3] > lo);
    CHECK(doctest::Approx(hi).epsilon(1e-4) == 4.8105);
    CHECK(doctest::Approx(lo).epsilon(1e-4) == 0.2079);
}

TEST_CASE("odd input dimension is rejected at construction") {
    CHECK_THROWS_AS(InvertibleNet(7, 5, 16, 0), std::invalid_argument);
}

TEST_CASE("zero-weight layers are the identity both ways") {
    InvertibleNet net(8, 5, 16, 0);
    zero_params(net);
    std::mt19937_64 rng(3);
    Tensor x = Tensor::uniform(4, 8, -2, 2, rng);
    CHECK(max_abs_diff(net.forward(x), x) == 0.0);
    CHECK(max_abs_diff(net.inverse(x), x) == 0.0);
}

TEST_CASE("constant t-subnets produce a pure translation per layer") {
    InvertibleNet net(8, 1, 16, 0);
    make_translation(net, 0.25);
    std::mt19937_64 rng(5);
    Tensor x = Tensor::uniform(3, 8, -2, 2, rng);
    Tensor y = net.forward(x);
    for (std::size_t i = 0; i < x.numel(); ++i)
        CHECK(y.data[i] == doctest::Approx(x.data[i] + 0.25).epsilon(1e-15));
    Tensor back = net.inverse(y);
    CHECK(max_abs_diff(back, x) < 1e-14);
}

TEST_CASE("coupling round trip: 100 random layers and inputs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        InvertibleNet net(16, 1, 32, seed);
        std::mt19937_64 rng(seed ^ 0xabcdef);
        Tensor x = Tensor::uniform(2, 16, -3, 3, rng);
        CHECK(max_abs_diff(net.inverse(net.forward(x)), x) < 1e-12);
    }
}

TEST_CASE("five-layer net round trip with and without spectral norm") {
    for (bool sn : {false, true}) {
        InvertibleNet net(64, 5, 64, 9);
        if (sn) net.set_spectral_norm(true);
        std::mt19937_64 rng(11);
        Tensor x = Tensor::uniform(8, 64, -2, 2, rng);
        CHECK(max_abs_diff(net.inverse(net.forward(x)), x) < 1e-10);
    }
}

TEST_CASE("disabling the half-swap and zeroing layers 2..5 leaves one coupling layer") {
    InvertibleNet net(8, 5, 16, 21);
    net.set_swap_halves(false);
    std::vector<Tensor*> params;
    net.collect_params(params);
    // Zero all but the first layer's subnets (4 subnets x 2 linear x (W, b)).
    for (std::size_t i = 16; i < params.size(); ++i)
        std::fill(params[i]->data.begin(), params[i]->data.end(), 0.0);

    InvertibleNet single(8, 1, 16, 21);  // same seed: identical first layer
    std::mt19937_64 rng(23);
    Tensor x = Tensor::uniform(4, 8, -1, 1, rng);
    CHECK(max_abs_diff(net.forward(x), single.forward(x)) == 0.0);
}

TEST_CASE("per-coordinate scale factors stay inside the clamp bounds") {
    InvertibleNet net(16, 5, 32, 31);
    std::mt19937_64 rng(33);
    Tensor x = Tensor::uniform(6, 16, -3, 3, rng);

    // Recompute the scale vectors layer by layer on a tape and check bounds.
    const double lo = std::exp(-M_PI / 2.0), hi = std::exp(M_PI / 2.0);
    Tape tape;
    int cur = tape.constant(x);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        int x1 = tape.slice_cols(cur, 0, 8);
        int x2 = tape.slice_cols(cur, 8, 16);
        int s2 = tape.expo(tape.arctan(layer.s2.forward(tape, x2)));
        for (double v : tape.val(s2).data) {
            CHECK(v > lo);
            CHECK(v < hi);
        }
        int y1 = tape.add(tape.hadamard(x1, s2), layer.t2.forward(tape, x2));
        int s1 = tape.expo(tape.arctan(layer.s1.forward(tape, y1)));
        for (double v : tape.val(s1).data) {
            CHECK(v > lo);
            CHECK(v < hi);
        }
        int y2 = tape.add(tape.hadamard(x2, s1), layer.t1.forward(tape, y1));
        cur = tape.concat_cols(y1, y2);
        if (l + 1 < net.layers().size()) {
            int a = tape.slice_cols(cur, 0, 8);
            int b = tape.slice_cols(cur, 8, 16);
            cur = tape.concat_cols(b, a);
        }
    }
    CHECK(max_abs_diff(tape.val(cur), net.forward(x)) == 0.0);
}

TEST_CASE("spectral normalization: diagonal and identity cases") {
    Tensor w(2, 2);
    w.data = {2, 0, 0, 1};
    SpectralNormState state;
    Tensor wsn = spectral_normalize(w, state, 20);
    CHECK(std::abs(wsn.data[0] - 1.0) < 1e-9);
    CHECK(std::abs(wsn.data[3] - 0.5) < 1e-9);
    CHECK(wsn.data[1] == 0.0);

    Tensor eye(3, 3);
    eye.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    SpectralNormState s2;
    Tensor esn = spectral_normalize(eye, s2, 20);
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(std::abs(esn.data[i] - eye.data[i]) < 1e-12);
}

TEST_CASE("power iteration sigma matches the exact SVD oracle") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor w = Tensor::uniform(5, 3, -2, 2, rng);
        SpectralNormState state;
        Tensor wsn = spectral_normalize(w, state, 20);
        auto s = oracle::svd_singular_values(wsn.data, 5, 3);
        CHECK(s.front() >= 0.99);
        CHECK(s.front() <= 1.01);
    }
}

TEST_CASE("zero matrix clamps sigma instead of dividing by zero") {
    Tensor w(3, 3);
    SpectralNormState state;
    Tensor wsn = spectral_normalize(w, state, 5);
    CHECK(state.sigma == 1e-12);
    for (double v : wsn.data) CHECK(v == 0.0);
}

TEST_CASE("with spectral norm every normalized subnet matrix has sigma ~ 1") {
    InvertibleNet net(16, 2, 32, 51);
    net.set_spectral_norm(true);
    net.power_iterate(20);
    for (auto& layer : net.layers()) {
        for (Mlp* sub : {&layer.s1, &layer.s2, &layer.t1, &layer.t2}) {
            for (auto& lin : sub->layers) {
                Tensor wsn = lin.weight;
                for (auto& v : wsn.data) v /= lin.sn.sigma;
                auto s = oracle::svd_singular_values(wsn.data, wsn.rows(), wsn.cols());
                CHECK(s.front() <= 1.0 + 1e-2);
                CHECK(s.front() >= 1.0 - 1e-2);
            }
        }
    }
}

TEST_CASE("end-to-end gradient of the net matches finite differences") {
    InvertibleNet net(8, 2, 8, 61);
    std::mt19937_64 rng(67);
    Tensor x = Tensor::uniform(3, 8, -1.5, 1.5, rng);
    std::vector<Tensor*> params;
    net.collect_params(params);

    auto eval = [&]() {
        Tape tape;
        return tape.val(tape.sum_sq(net.forward(tape, tape.constant(x)))).data[0];
    };
    Tape tape;
    auto grads = tape.backward(tape.sum_sq(net.forward(tape, tape.constant(x))));
    std::vector<std::vector<double>> ad;
    for (Tensor* p : params) ad.push_back(grads[p].data);
    CHECK(oracle::max_rel_error(ad, oracle::fd_gradient(eval, params, 1e-6)) < 1e-5);
}
