#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eir/gradcheck.hpp"
#include "eir/params.hpp"
#include "eir/tensor.hpp"

using namespace eir;

namespace {

Tensor rand_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul identity, hand product, scalar case") {
    Tape tape;
    Tensor i2 = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor out = matmul(tape, i2, a);
    CHECK(out.vec() == std::vector<double>{1, 2, 3, 4});

    Tensor b = Tensor::from({2, 1}, {5, 6});
    Tensor ab = matmul(tape, a, b);
    CHECK(ab.vec() == std::vector<double>{17, 39});

    Tensor s1 = Tensor::from({1, 1}, {2});
    Tensor s2 = Tensor::from({1, 1}, {3});
    CHECK(matmul(tape, s1, s2).item() == 6.0);
}

TEST_CASE("matmul shape error names both shapes") {
    Tape tape;
    Tensor a({2, 3});
    Tensor b({2, 3});
    CHECK_THROWS_WITH_AS(matmul(tape, a, b), doctest::Contains("[2x3]"),
                         std::invalid_argument);
}

TEST_CASE("softmax symmetry and closed form") {
    Tape tape;
    Tensor z = Tensor::from({3}, {0, 0, 0});
    Tensor s = softmax(tape, z, 0);
    for (int i = 0; i < 3; ++i) CHECK(s.vec()[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

    Tensor two = Tensor::from({2}, {1, 1});
    Tensor s2 = softmax(tape, two, 0);
    CHECK(s2.vec()[0] == doctest::Approx(0.5).epsilon(1e-12));

    Tensor ln2 = Tensor::from({2}, {std::log(2.0), 0.0});
    Tensor s3 = softmax(tape, ln2, 0);
    CHECK(s3.vec()[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(s3.vec()[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(tape, ln2, 1), std::out_of_range);
}

TEST_CASE("softmax rows are stochastic and shift invariant") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        Tape tape;
        Tensor x = rand_tensor({5, 6}, rng, false);
        Tensor s = softmax(tape, x, 1);
        for (int i = 0; i < 5; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 6; ++j) {
                CHECK(s.at(i, j) >= 0.0);
                sum += s.at(i, j);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
        Tensor shift(x.shape(), 3.25);
        Tensor s2 = softmax(tape, add(tape, x, shift), 1);
        for (size_t i = 0; i < s.numel(); ++i)
            CHECK(std::abs(s.vec()[i] - s2.vec()[i]) < 1e-9);
    }
}

TEST_CASE("layer_norm examples") {
    Tape tape;
    Tensor gamma = Tensor::from({3}, {1, 1, 1});
    Tensor beta = Tensor::from({3}, {0, 0, 0});
    Tensor constant = Tensor::from({1, 3}, {5, 5, 5});
    Tensor out = layer_norm(tape, constant, gamma, beta, 1e-5);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(out.at(0, j)) < 1e-6);

    Tensor g2 = Tensor::from({2}, {1, 1});
    Tensor b2 = Tensor::from({2}, {0, 0});
    Tensor pm = Tensor::from({1, 2}, {1, -1});
    Tensor out2 = layer_norm(tape, pm, g2, b2, 1e-12);
    CHECK(out2.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out2.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-6));

    Tensor g3 = Tensor::from({2}, {2, 2});
    Tensor b3 = Tensor::from({2}, {1, 1});
    Tensor out3 = layer_norm(tape, pm, g3, b3, 1e-12);
    CHECK(out3.at(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(out3.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-6));

    CHECK_THROWS_AS(layer_norm(tape, pm, gamma, beta, 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(layer_norm(tape, pm, g2, b2, 0.0), std::invalid_argument);
}

TEST_CASE("layer_norm scale invariance") {
    std::mt19937_64 rng(11);
    Tensor gamma = Tensor::from({8}, std::vector<double>(8, 1.0));
    Tensor beta = Tensor::from({8}, std::vector<double>(8, 0.0));
    // eps contributes a relative deviation of about eps*(1/c^2-1)/(2*var),
    // so a small eps keeps the invariance check inside 1e-6
    for (double c : {0.5, 2.0, 117.0}) {
        Tape tape;
        Tensor x = rand_tensor({4, 8}, rng, false);
        Tensor a = layer_norm(tape, x, gamma, beta, 1e-10);
        Tensor b = layer_norm(tape, scale(tape, x, c), gamma, beta, 1e-10);
        for (size_t i = 0; i < a.numel(); ++i)
            CHECK(std::abs(a.vec()[i] - b.vec()[i]) < 1e-6);
    }
}

TEST_CASE("elementwise examples") {
    Tape tape;
    Tensor a = Tensor::from({2}, {1, 5});
    Tensor b = Tensor::from({2}, {3, 2});
    CHECK(emax(tape, a, b).vec() == std::vector<double>{3, 5});

    Tensor x = Tensor::from({3}, {4, -1, 0.5});
    Tensor z = Tensor::from({3}, {0, 0, 0});
    CHECK(add(tape, x, z).vec() == x.vec());

    Tensor m1 = Tensor::from({2}, {2, 3});
    Tensor m2 = Tensor::from({2}, {4, 5});
    CHECK(mul(tape, m1, m2).vec() == std::vector<double>{8, 15});

    Tensor bad({3});
    CHECK_THROWS_AS(add(tape, a, bad), std::invalid_argument);
}

TEST_CASE("max gradient routes to argmax, first operand on ties") {
    Tape tape;
    Tensor a = Tensor::from({1, 3}, {1, 7, 4}, true);
    Tensor b = Tensor::from({1, 3}, {2, 3, 4}, true);  // position 2 ties
    Tensor m = emax(tape, a, b);
    CHECK(m.vec() == std::vector<double>{2, 7, 4});
    Tensor ones = Tensor::from({3, 1}, {1, 1, 1});
    tape.backward(matmul(tape, m, ones));
    CHECK(a.grad() == std::vector<double>{0, 1, 1});
    CHECK(b.grad() == std::vector<double>{1, 0, 0});
}

TEST_CASE("cross_entropy examples") {
    Tape tape;
    Tensor perfect_p = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor perfect_y = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK(cross_entropy(tape, perfect_p, perfect_y).item() == doctest::Approx(0.0).epsilon(1e-12));

    Tensor p = Tensor::from({1, 2}, {0.75, 0.25});
    Tensor y = Tensor::from({1, 2}, {1, 0});
    CHECK(cross_entropy(tape, p, y).item() ==
          doctest::Approx(0.2876820724517809).epsilon(1e-12));

    const int k = 5;
    Tensor uni = Tensor::from({1, k}, std::vector<double>(k, 1.0 / k));
    Tensor y5 = Tensor::from({1, k}, {0, 0, 1, 0, 0});
    CHECK(cross_entropy(tape, uni, y5).item() == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    Tensor bad_y = Tensor::from({1, 2}, {0.5, 0.5});
    CHECK_THROWS_AS(cross_entropy(tape, p, bad_y), std::invalid_argument);

    // zero probability at the true class is floored, not fatal
    Tensor zero_p = Tensor::from({1, 2}, {0.0, 1.0});
    Tensor y0 = Tensor::from({1, 2}, {1, 0});
    CHECK(cross_entropy(tape, zero_p, y0).item() == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("backward: product rule and non-scalar contract") {
    Tape tape;
    Tensor x = Tensor::scalar(2.0, true);
    Tensor y = Tensor::scalar(3.0, true);
    Tensor p = mul(tape, x, y);
    tape.backward(p);
    CHECK(x.grad()[0] == 3.0);
    CHECK(y.grad()[0] == 2.0);

    Tape t2;
    Tensor v = Tensor::from({2}, {1, 2}, true);
    Tensor out = scale(t2, v, 2.0);
    CHECK_THROWS_AS(t2.backward(out), std::invalid_argument);
}

TEST_CASE("backward: fan-out accumulates exactly") {
    // loss = f(x) + g(x) with f = a*x, g = b*x
    Tensor a = Tensor::scalar(1.25);
    Tensor b = Tensor::scalar(-0.75);

    Tape t1;
    Tensor x1 = Tensor::scalar(0.4, true);
    t1.backward(mul(t1, a, x1));
    const double gf = x1.grad()[0];

    Tape t2;
    Tensor x2 = Tensor::scalar(0.4, true);
    t2.backward(mul(t2, b, x2));
    const double gg = x2.grad()[0];

    Tape t3;
    Tensor x3 = Tensor::scalar(0.4, true);
    t3.backward(add(t3, mul(t3, a, x3), mul(t3, b, x3)));
    CHECK(x3.grad()[0] == gf + gg);
}

TEST_CASE("backward: softmax + cross-entropy gradient equals p - y") {
    std::mt19937_64 rng(23);
    Tape tape;
    Tensor logits = rand_tensor({3, 4}, rng);
    Tensor y = Tensor::from({3, 4}, {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0});
    Tensor p = softmax(tape, logits, 1);
    Tensor loss = cross_entropy(tape, p, y);
    tape.backward(loss);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) {
            const double expected = (p.at(i, j) - y.at(i, j)) / 3.0;
            CHECK(logits.grad()[i * 4 + j] == doctest::Approx(expected).epsilon(1e-9));
        }
}

TEST_CASE("backward: two-layer matmul chain matches finite differences") {
    std::mt19937_64 rng(31);
    Tensor a = rand_tensor({3, 4}, rng);
    Tensor b = rand_tensor({4, 5}, rng);
    Tensor c = rand_tensor({5, 2}, rng);
    Tensor w = rand_tensor({2, 2}, rng, false);  // fixed weighting to scalarize

    auto forward = [&]() {
        Tape tape;
        Tensor h = matmul(tape, matmul(tape, a, b), c);  // 3x2
        Tensor weighted = mul(tape, h, Tensor::from({3, 2}, {w.vec()[0], w.vec()[1],
                                                             w.vec()[2], w.vec()[3],
                                                             w.vec()[0], w.vec()[3]}));
        Tensor m = mean_rows(tape, weighted);            // 1x2
        Tensor ones = Tensor::from({2, 1}, {1, 1});
        return matmul(tape, m, ones).item();
    };

    Tape tape;
    Tensor h = matmul(tape, matmul(tape, a, b), c);
    Tensor weighted = mul(tape, h, Tensor::from({3, 2}, {w.vec()[0], w.vec()[1], w.vec()[2],
                                                         w.vec()[3], w.vec()[0], w.vec()[3]}));
    Tensor m = mean_rows(tape, weighted);
    Tensor ones = Tensor::from({2, 1}, {1, 1});
    Tensor loss = matmul(tape, m, ones);
    tape.backward(loss);

    GradCheckOptions opt;
    opt.probes_per_tensor = 0;  // all slots
    auto results = gradcheck(forward, {{"a", a}, {"b", b}, {"c", c}}, opt);
    for (const auto& r : results) {
        INFO(r.group);
        CHECK(r.worst_rel < 1e-4);
    }
}

TEST_CASE("randomized gradcheck across every differentiable op") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int rep = 0; rep < 6; ++rep) {
        const int r = dim(rng), s = dim(rng), t = dim(rng);
        Tensor a = rand_tensor({r, s}, rng);
        Tensor b = rand_tensor({s, t}, rng);
        Tensor b_nt = rand_tensor({t, s}, rng);
        Tensor c = rand_tensor({r, s}, rng);
        Tensor gamma = rand_tensor({s}, rng);
        Tensor beta = rand_tensor({s}, rng);
        Tensor bias = rand_tensor({s}, rng);
        Tensor wsum = rand_tensor({t, 1}, rng, false);
        Tensor wsum_s = rand_tensor({s, 1}, rng, false);

        auto forward = [&]() {
            Tape tape;
            Tensor mm = matmul(tape, a, b);                       // r x t
            Tensor mnt = matmul_nt(tape, a, b_nt);                // r x t
            Tensor sm = softmax(tape, add(tape, mm, mnt), 1);     // r x t
            Tensor ln = layer_norm(tape, add_bias_row(tape, c, bias), gamma, beta, 1e-5);
            Tensor mx = emax(tape, relu(tape, a), scale(tape, c, 0.7));
            Tensor joined = concat_cols(tape, {sm, mul(tape, ln, a), sub(tape, mx, c)});
            Tensor left = slice_cols(tape, joined, 0, t);         // r x t
            Tensor rest = slice_cols(tape, joined, t, 2 * s);     // r x 2s
            Tensor red1 = matmul(tape, mean_rows(tape, left), wsum);
            Tensor rm = mean_rows(tape, rest);                    // 1 x 2s
            Tensor red2 = matmul(tape, add(tape, slice_cols(tape, rm, 0, s),
                                           slice_cols(tape, rm, s, s)),
                                 wsum_s);
            return add(tape, red1, red2).item();
        };

        Tape tape;
        {
            Tensor mm = matmul(tape, a, b);
            Tensor mnt = matmul_nt(tape, a, b_nt);
            Tensor sm = softmax(tape, add(tape, mm, mnt), 1);
            Tensor ln = layer_norm(tape, add_bias_row(tape, c, bias), gamma, beta, 1e-5);
            Tensor mx = emax(tape, relu(tape, a), scale(tape, c, 0.7));
            Tensor joined = concat_cols(tape, {sm, mul(tape, ln, a), sub(tape, mx, c)});
            Tensor left = slice_cols(tape, joined, 0, t);
            Tensor rest = slice_cols(tape, joined, t, 2 * s);
            Tensor red1 = matmul(tape, mean_rows(tape, left), wsum);
            Tensor rm = mean_rows(tape, rest);
            Tensor red2 = matmul(tape, add(tape, slice_cols(tape, rm, 0, s),
                                           slice_cols(tape, rm, s, s)),
                                 wsum_s);
            tape.backward(add(tape, red1, red2));
        }

        GradCheckOptions opt;
        opt.probes_per_tensor = 0;
        opt.seed = 100 + rep;
        auto results = gradcheck(forward,
                                 {{"a", a},
                                  {"b", b},
                                  {"b_nt", b_nt},
                                  {"c", c},
                                  {"gamma", gamma},
                                  {"beta", beta},
                                  {"bias", bias}},
                                 opt);
        for (const auto& r : results) {
            INFO(rep, " ", r.group);
            CHECK(r.worst_rel < 1e-4);
        }
    }
}

TEST_CASE("embedding gradients scatter-add") {
    Tape tape;
    Tensor table = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
    Tensor out = embed_rows(tape, table, {2, 0, 2});
    CHECK(out.vec() == std::vector<double>{5, 6, 1, 2, 5, 6});
    Tensor ones = Tensor::from({1, 3}, {1, 1, 1});
    Tensor colsum = matmul(tape, ones, out);  // 1x2
    Tensor w = Tensor::from({2, 1}, {1, 1});
    tape.backward(matmul(tape, colsum, w));
    CHECK(table.grad() == std::vector<double>{1, 1, 0, 0, 2, 2});

    CHECK_THROWS_AS(embed_rows(tape, table, {3}), std::out_of_range);
}

TEST_CASE("adam: zero grad leaves parameter, advances step") {
    Tensor p = Tensor::from({2}, {1.5, -2.0}, true);
    p.impl()->ensure_grad();
    AdamState st;
    adam_step(p, st);
    CHECK(p.vec() == std::vector<double>{1.5, -2.0});
    CHECK(st.step == 1);
    adam_step(p, st);
    CHECK(st.step == 2);
}

TEST_CASE("adam: first step moves by about -lr * sign(g)") {
    Tensor p = Tensor::from({1}, {0.7}, true);
    p.impl()->ensure_grad();
    p.impl()->grad[0] = 0.013;
    AdamState st;
    st.lr = 1e-2;
    adam_step(p, st);
    CHECK(p.vec()[0] == doctest::Approx(0.7 - 1e-2).epsilon(1e-5));

    Tensor q = Tensor::from({1}, {0.7}, true);
    q.impl()->ensure_grad();
    q.impl()->grad[0] = -4.2;
    AdamState st2;
    st2.lr = 1e-2;
    adam_step(q, st2);
    CHECK(q.vec()[0] == doctest::Approx(0.7 + 1e-2).epsilon(1e-5));
}

TEST_CASE("adam: descends a scalar quadratic") {
    // f(x) = (x - 3)^2, grad = 2(x - 3)
    Tensor x = Tensor::from({1}, {0.0}, true);
    AdamState st;
    st.lr = 0.1;
    double prev = std::abs(x.vec()[0] - 3.0);
    for (int i = 0; i < 2; ++i) {
        x.zero_grad();
        x.impl()->ensure_grad();
        x.impl()->grad[0] = 2.0 * (x.vec()[0] - 3.0);
        adam_step(x, st);
    }
    CHECK(std::abs(x.vec()[0] - 3.0) < prev);

    Tensor y = Tensor::from({1}, {0.0}, true);
    AdamState st2;
    CHECK_THROWS_AS(adam_step(y, st2), std::runtime_error);
}

TEST_CASE("checkpoint round-trip is byte identical") {
    std::mt19937_64 rng(53);
    ParamStore store;
    store.create("alpha.w", {3, 4}, rng, 0.5);
    store.create("alpha.b", {4}, rng, 0.5);
    store.create_const("beta.gamma", {4}, 1.0);
    const std::string p1 = "ckpt_roundtrip_a.bin";
    const std::string p2 = "ckpt_roundtrip_b.bin";
    save_checkpoint(store, p1);

    ParamStore loaded;
    std::mt19937_64 rng2(999);
    loaded.create("alpha.w", {3, 4}, rng2, 0.5);
    loaded.create("alpha.b", {4}, rng2, 0.5);
    loaded.create_const("beta.gamma", {4}, 0.0);
    load_checkpoint(loaded, p1);
    save_checkpoint(loaded, p2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK(!b1.empty());

    for (size_t i = 0; i < store.entries().size(); ++i)
        CHECK(store.entries()[i].second.vec() == loaded.entries()[i].second.vec());

    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("tensor invariants: rank bounds and size checks") {
    CHECK_THROWS_AS(Tensor(Shape{}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor(Shape{1, 2, 3, 4, 5}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor(Shape{0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), std::invalid_argument);
    Tensor ok({2, 3, 4, 5});
    CHECK(ok.numel() == 120);
}
