#include <cstdio>
#include <filesystem>
#include <fstream>

#include "djrhr/adam.hpp"
#include "djrhr/checkpoint.hpp"
#include "djrhr/graph.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace djrhr;
using testutil::random_tensor;

namespace {

template <typename T>
TensorT<T> bias_tensor(std::int64_t c, T v = T(0)) {
    return TensorT<T>(1, c, 1, 1, v);
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
    std::mt19937_64 rng(1);
    Graph g;
    const int x = g.input(random_tensor<float>(1, 1, 3, 3, rng));
    Tensor w(1, 1, 1, 1, 1.0f);
    const int wi = g.input(w);
    const int bi = g.input(bias_tensor<float>(1));
    const int y = g.conv2d(x, wi, bi, 1, 0);
    CHECK(g.value(y).dims() == g.value(x).dims());
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(g.value(y).vec()[i] == g.value(x).vec()[i]);
    }
}

TEST_CASE("conv2d all-ones kernel hand oracle") {
    Graph g;
    Tensor x(1, 1, 2, 2);
    x.vec() = {1, 2, 3, 4};
    const int xi = g.input(x);
    const int wi = g.input(Tensor(1, 1, 3, 3, 1.0f));
    const int bi = g.input(bias_tensor<float>(1));
    const int y = g.conv2d(xi, wi, bi, 1, 1);
    for (float v : g.value(y).vec()) CHECK(v == doctest::Approx(10.0f));
}

TEST_CASE("conv2d constant field interior equals c * kernel sum") {
    std::mt19937_64 rng(2);
    const float c = 0.37f;
    Graph g;
    const int xi = g.input(Tensor(1, 1, 6, 6, c));
    Tensor w = random_tensor<float>(1, 1, 3, 3, rng, -1.0, 1.0);
    float wsum = 0.f;
    for (float v : w.vec()) wsum += v;
    const int wi = g.input(w);
    const int bi = g.input(bias_tensor<float>(1));
    const int y = g.conv2d(xi, wi, bi, 1, 1);
    for (std::int64_t yy = 1; yy < 5; ++yy) {
        for (std::int64_t xx = 1; xx < 5; ++xx) {
            CHECK(g.value(y).at(0, 0, yy, xx) == doctest::Approx(c * wsum).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv2d random case matches scalar oracle") {
    std::mt19937_64 rng(3);
    GraphT<double> g;
    const auto x = random_tensor<double>(2, 3, 7, 6, rng, -1.0, 1.0);
    const auto w = random_tensor<double>(4, 3, 3, 3, rng, -1.0, 1.0);
    auto b = bias_tensor<double>(4);
    testutil::fill_uniform(b, rng, -0.5, 0.5);
    const int y = g.conv2d(g.input(x), g.input(w), g.input(b), 1, 1);
    const auto expect = testutil::conv2d_oracle(x, w, std::vector<double>(b.vec()), 1, 1);
    REQUIRE(g.value(y).dims() == expect.dims());
    for (std::size_t i = 0; i < expect.vec().size(); ++i) {
        CHECK(g.value(y).vec()[i] == doctest::Approx(expect.vec()[i]).epsilon(1e-10));
    }
}

TEST_CASE("conv2d linearity") {
    std::mt19937_64 rng(4);
    const auto x = random_tensor<float>(1, 2, 8, 8, rng, -1.0, 1.0);
    const auto y = random_tensor<float>(1, 2, 8, 8, rng, -1.0, 1.0);
    const auto w = random_tensor<float>(3, 2, 3, 3, rng, -1.0, 1.0);
    const float a = 0.7f, b = -1.3f;
    Tensor mix(1, 2, 8, 8);
    for (std::size_t i = 0; i < mix.vec().size(); ++i) {
        mix.vec()[i] = a * x.vec()[i] + b * y.vec()[i];
    }
    Graph g;
    const int wi = g.input(w);
    const int bi = g.input(bias_tensor<float>(3));
    const int cm = g.conv2d(g.input(mix), wi, bi, 1, 1);
    const int cx = g.conv2d(g.input(x), wi, bi, 1, 1);
    const int cy = g.conv2d(g.input(y), wi, bi, 1, 1);
    for (std::size_t i = 0; i < g.value(cm).vec().size(); ++i) {
        const float expect = a * g.value(cx).vec()[i] + b * g.value(cy).vec()[i];
        CHECK(g.value(cm).vec()[i] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("conv2d shape errors") {
    Graph g;
    const int x = g.input(Tensor(1, 2, 4, 4));
    const int w3 = g.input(Tensor(1, 3, 3, 3));  // channel mismatch
    const int b = g.input(bias_tensor<float>(1));
    CHECK_THROWS_AS(g.conv2d(x, w3, b, 1, 1), ShapeError);
    const int wrect = g.input(Tensor(1, 2, 3, 2));  // non-square
    CHECK_THROWS_AS(g.conv2d(x, wrect, b, 1, 1), ShapeError);
    CHECK_THROWS_WITH_AS(g.conv2d(x, w3, b, 1, 1),
                         doctest::Contains("(1,2,4,4)"), ShapeError);
}

TEST_CASE("relu examples") {
    Graph g;
    Tensor x(1, 1, 1, 3);
    x.vec() = {-1, 0, 2};
    const int y = g.relu(g.input(x));
    CHECK(g.value(y).vec() == std::vector<float>{0, 0, 2});

    std::mt19937_64 rng(5);
    const auto neg = random_tensor<float>(1, 2, 4, 4, rng, -2.0, -0.1);
    const int yn = g.relu(g.input(neg));
    for (float v : g.value(yn).vec()) CHECK(v == 0.0f);

    // idempotence
    const auto r = random_tensor<float>(1, 2, 4, 4, rng, -1.0, 1.0);
    const int once = g.relu(g.input(r));
    const int twice = g.relu(once);
    CHECK(g.value(once).vec() == g.value(twice).vec());
}

TEST_CASE("concat_channels") {
    std::mt19937_64 rng(6);
    Graph g;
    const auto a = random_tensor<float>(2, 12, 4, 4, rng);
    const auto d = random_tensor<float>(2, 1, 4, 4, rng);
    const int cat = g.concat_channels({g.input(a), g.input(d)});
    CHECK(g.value(cat).dims() == Dims{2, 13, 4, 4});

    // split recovers the parts bit-exactly
    const int sa = g.slice_channels(cat, 0, 12);
    const int sd = g.slice_channels(cat, 12, 13);
    CHECK(g.value(sa).vec() == a.vec());
    CHECK(g.value(sd).vec() == d.vec());

    // single part is the identity
    const int one = g.concat_channels({g.input(a)});
    CHECK(g.value(one).vec() == a.vec());

    // spatial mismatch names the offending part
    const int bad = g.input(Tensor(2, 1, 5, 4));
    CHECK_THROWS_WITH_AS(g.concat_channels({g.input(a), bad}), doctest::Contains("part 1"),
                         ShapeError);
}

TEST_CASE("frobenius_sq") {
    std::mt19937_64 rng(7);
    Graph g;
    const auto a = random_tensor<float>(2, 3, 4, 4, rng);
    CHECK(g.value(g.frobenius_sq(g.input(a), g.input(a))).vec()[0] == 0.0f);

    Tensor b = a;
    for (float& v : b.vec()) v += 1.0f;
    // per-image size m = 3*4*4 = 48, batch-averaged
    CHECK(g.value(g.frobenius_sq(g.input(a), g.input(b))).vec()[0] == doctest::Approx(48.0));

    GraphT<double> gd;
    const auto x = random_tensor<double>(3, 2, 5, 5, rng);
    const auto y = random_tensor<double>(3, 2, 5, 5, rng);
    double oracle = 0.0;
    for (std::size_t i = 0; i < x.vec().size(); ++i) {
        oracle += (x.vec()[i] - y.vec()[i]) * (x.vec()[i] - y.vec()[i]);
    }
    oracle /= 3.0;
    CHECK(gd.value(gd.frobenius_sq(gd.input(x), gd.input(y))).vec()[0] ==
          doctest::Approx(oracle).epsilon(1e-6));

    CHECK_THROWS_AS(g.frobenius_sq(g.input(a), g.input(Tensor(2, 3, 4, 5))), ShapeError);
}

TEST_CASE("backward: gradient of a sum-of-elements composite is all ones") {
    // sum(x) realized as ||x + 1/2||^2 - ||x||^2 - m/4 (the constant does not
    // affect the gradient), batch 1
    std::mt19937_64 rng(8);
    GraphT<double> gd;
    const auto xv = random_tensor<double>(1, 2, 3, 3, rng, -1.0, 1.0);
    const int x = gd.param("x", xv);
    TensorT<double> halfv(1, 2, 3, 3, 0.5);
    const int shifted = gd.add(x, gd.input(halfv));
    const int zero = gd.input(TensorT<double>(1, 2, 3, 3));
    const int loss = gd.sub(gd.frobenius_sq(shifted, zero), gd.frobenius_sq(x, zero));
    gd.backward(loss);
    for (double v : gd.grad(x).vec()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward: relu gradient is zero at strictly negative inputs") {
    GraphT<double> g;
    const int x = g.param("x", TensorT<double>(1, 1, 2, 2, -0.5));
    const int zero = g.input(TensorT<double>(1, 1, 2, 2));
    const int loss = g.frobenius_sq(g.relu(x), zero);
    g.backward(loss);
    for (double v : g.grad(x).vec()) CHECK(v == 0.0);
}

TEST_CASE("backward: loss must be scalar; disconnected parameter gets zero gradient") {
    GraphT<double> g;
    const int x = g.param("x", TensorT<double>(1, 1, 2, 2, 1.0));
    CHECK_THROWS_AS(g.backward(x), ShapeError);

    const int unused = g.param("unused", TensorT<double>(1, 1, 2, 2, 3.0));
    const int zero = g.input(TensorT<double>(1, 1, 2, 2));
    const int loss = g.frobenius_sq(x, zero);
    g.backward(loss);
    for (double v : g.grad(unused).vec()) CHECK(v == 0.0);
}

TEST_CASE("backward determinism: repeated runs are bitwise identical") {
    std::mt19937_64 rng(9);
    const auto xv = random_tensor<float>(2, 3, 6, 6, rng, -1.0, 1.0);
    const auto wv = random_tensor<float>(4, 3, 3, 3, rng, -0.5, 0.5);
    const auto tv = random_tensor<float>(2, 4, 6, 6, rng);
    std::vector<float> first_loss, first_grad;
    for (int run = 0; run < 2; ++run) {
        Graph g;
        const int w = g.param("w", wv);
        const int y = g.conv2d(g.input(xv), w, g.param("b", bias_tensor<float>(4)), 1, 1);
        const int loss = g.frobenius_sq(g.relu(y), g.input(tv));
        g.backward(loss);
        if (run == 0) {
            first_loss = g.value(loss).vec();
            first_grad = g.grad(w).vec();
        } else {
            CHECK(g.value(loss).vec() == first_loss);
            CHECK(g.grad(w).vec() == first_grad);
        }
    }
}

TEST_CASE("finite differences: every primitive op") {
    std::mt19937_64 rng(10);

    auto check_op = [&](auto build, std::vector<TensorT<double>*> params) {
        std::vector<TensorT<double>> analytic;
        {
            GraphT<double> g;
            std::vector<int> ids;
            const int loss = build(g, ids);
            g.backward(loss);
            for (int id : ids) analytic.push_back(g.grad(id));
        }
        auto eval = [&]() {
            GraphT<double> g;
            std::vector<int> ids;
            return g.value(build(g, ids)).vec()[0];
        };
        CHECK(testutil::fd_max_rel_error(params, analytic, eval) < 1e-4);
    };

    SUBCASE("conv2d stride 1 pad 1") {
        auto x = random_tensor<double>(2, 3, 8, 8, rng, -1.0, 1.0);
        auto w = random_tensor<double>(2, 3, 3, 3, rng, -0.7, 0.7);
        auto b = bias_tensor<double>(2, 0.1);
        const auto target = random_tensor<double>(2, 2, 8, 8, rng);
        check_op(
            [&](GraphT<double>& g, std::vector<int>& ids) {
                const int xi = g.param("x", x);
                const int wi = g.param("w", w);
                const int bi = g.param("b", b);
                ids = {xi, wi, bi};
                return g.frobenius_sq(g.conv2d(xi, wi, bi, 1, 1), g.input(target));
            },
            {&x, &w, &b});
    }

    SUBCASE("conv2d stride 2 pad 0") {
        auto x = random_tensor<double>(1, 2, 8, 8, rng, -1.0, 1.0);
        auto w = random_tensor<double>(3, 2, 2, 2, rng, -0.7, 0.7);
        auto b = bias_tensor<double>(3);
        const auto target = random_tensor<double>(1, 3, 4, 4, rng);
        check_op(
            [&](GraphT<double>& g, std::vector<int>& ids) {
                const int xi = g.param("x", x);
                const int wi = g.param("w", w);
                const int bi = g.param("b", b);
                ids = {xi, wi, bi};
                return g.frobenius_sq(g.conv2d(xi, wi, bi, 2, 0), g.input(target));
            },
            {&x, &w, &b});
    }

    SUBCASE("relu (inputs away from the kink)") {
        auto x = random_tensor<double>(2, 2, 6, 6, rng, -1.0, 1.0);
        for (double& v : x.vec()) {
            if (std::abs(v) < 1e-3) v = 0.1;
        }
        const auto target = random_tensor<double>(2, 2, 6, 6, rng);
        check_op(
            [&](GraphT<double>& g, std::vector<int>& ids) {
                const int xi = g.param("x", x);
                ids = {xi};
                return g.frobenius_sq(g.relu(xi), g.input(target));
            },
            {&x});
    }

    SUBCASE("concat + slice + add + sub + scale") {
        auto a = random_tensor<double>(2, 3, 4, 4, rng, -1.0, 1.0);
        auto b = random_tensor<double>(2, 2, 4, 4, rng, -1.0, 1.0);
        const auto target = random_tensor<double>(2, 2, 4, 4, rng);
        check_op(
            [&](GraphT<double>& g, std::vector<int>& ids) {
                const int ai = g.param("a", a);
                const int bi = g.param("b", b);
                ids = {ai, bi};
                const int cat = g.concat_channels({ai, bi});
                const int s1 = g.slice_channels(cat, 1, 3);
                const int s2 = g.slice_channels(cat, 3, 5);
                const int mixed = g.sub(g.add(s1, g.scale(s2, 0.3)), g.scale(s1, -1.7));
                return g.frobenius_sq(mixed, g.input(target));
            },
            {&a, &b});
    }

    SUBCASE("frobenius_sq both sides") {
        auto a = random_tensor<double>(2, 2, 4, 4, rng, -1.0, 1.0);
        auto b = random_tensor<double>(2, 2, 4, 4, rng, -1.0, 1.0);
        check_op(
            [&](GraphT<double>& g, std::vector<int>& ids) {
                const int ai = g.param("a", a);
                const int bi = g.param("b", b);
                ids = {ai, bi};
                return g.frobenius_sq(ai, bi);
            },
            {&a, &b});
    }
}

TEST_CASE("adam: bias-corrected first step") {
    AdamConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.0;
    Adam opt(cfg);
    std::vector<std::pair<std::string, Tensor>> params{{"p", Tensor(1, 1, 1, 4, 0.5f)}};
    std::vector<Tensor> grads{Tensor(1, 1, 1, 4, 1.0f)};
    opt.step(params, grads);
    CHECK(opt.step_count() == 1);
    for (float v : params[0].second.vec()) {
        CHECK(v == doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
    }
}

TEST_CASE("adam: zero gradient leaves params unchanged; decay-only step scales") {
    {
        Adam opt;
        opt.config().weight_decay = 0.0;
        std::vector<std::pair<std::string, Tensor>> params{{"p", Tensor(1, 1, 1, 3, 0.25f)}};
        std::vector<Tensor> grads{Tensor(1, 1, 1, 3, 0.0f)};
        opt.step(params, grads);
        for (float v : params[0].second.vec()) CHECK(v == 0.25f);
    }
    {
        Adam opt;
        opt.config().lr = 1e-3;
        opt.config().weight_decay = 0.1;
        std::vector<std::pair<std::string, Tensor>> params{{"p", Tensor(1, 1, 1, 3, 1.0f)}};
        std::vector<Tensor> grads{Tensor(1, 1, 1, 3, 0.0f)};
        opt.step(params, grads);
        for (float v : params[0].second.vec()) {
            CHECK(v == doctest::Approx(1.0 - 1e-4).epsilon(1e-6));
        }
    }
}

TEST_CASE("adam: shape mismatch") {
    Adam opt;
    std::vector<std::pair<std::string, Tensor>> params{{"p", Tensor(1, 1, 1, 3)}};
    std::vector<Tensor> grads{Tensor(1, 1, 1, 4)};
    CHECK_THROWS_AS(opt.step(params, grads), ShapeError);
}

TEST_CASE("checkpoint round trip is bitwise identical") {
    std::mt19937_64 rng(11);
    const std::string path = (std::filesystem::temp_directory_path() / "djrhr_ckpt_test.bin").string();
    Checkpoint ckpt;
    ckpt.entries.emplace_back("layer.weight", random_tensor<float>(4, 3, 3, 3, rng, -1.0, 1.0));
    ckpt.entries.emplace_back("layer.bias", random_tensor<float>(1, 4, 1, 1, rng, -1.0, 1.0));
    ckpt.entries.emplace_back("adam.t", Tensor(1, 1, 1, 1, 17.0f));
    save_checkpoint(path, ckpt);
    const Checkpoint back = load_checkpoint(path);
    REQUIRE(back.entries.size() == ckpt.entries.size());
    for (std::size_t i = 0; i < ckpt.entries.size(); ++i) {
        CHECK(back.entries[i].first == ckpt.entries[i].first);
        CHECK(back.entries[i].second.dims() == ckpt.entries[i].second.dims());
        CHECK(back.entries[i].second.vec() == ckpt.entries[i].second.vec());
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint error taxonomy") {
    const auto tmp = std::filesystem::temp_directory_path();
    const std::string path = (tmp / "djrhr_ckpt_bad.bin").string();
    Checkpoint ckpt;
    ckpt.entries.emplace_back("p", Tensor(1, 1, 2, 2, 1.0f));
    save_checkpoint(path, ckpt);

    SUBCASE("corrupted magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
    }
    SUBCASE("future version") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const std::uint32_t future = 999;
        f.write(reinterpret_cast<const char*>(&future), 4);
        f.close();
        CHECK_THROWS_AS(load_checkpoint(path), CheckpointVersionError);
    }
    SUBCASE("truncated file") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 6);
        CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
    }
    std::filesystem::remove(path);
}
