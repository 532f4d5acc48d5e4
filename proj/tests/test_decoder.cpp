#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eir/decoder.hpp"

using namespace eir;

namespace {

Tensor rand_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = false) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("classify: hand-computed two-state example") {
    // S_e = [1], states = [ln 3; 0] gives logits (ln 3, 0) -> p = (0.75, 0.25)
    Tape tape;
    Classifier cls;
    cls.states = Tensor::from({2, 1}, {std::log(3.0), 0.0});
    cls.topics = Tensor::from({1, 1}, {0.0});
    Tensor S_e = Tensor::from({1, 1}, {1.0});
    Tensor y = Tensor::from({1, 2}, {1, 0});
    ClassifyResult r = classify(tape, S_e, cls, y);
    CHECK(r.p.at(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.p.at(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.loss.item() == doctest::Approx(0.2876820724517809).epsilon(1e-12));
}

TEST_CASE("classify: zero state table gives uniform rows and ln k loss") {
    std::mt19937_64 rng(3);
    Tape tape;
    const int n = 4, k = 3, e = 8;
    Classifier cls;
    cls.states = Tensor({k, e}, 0.0);
    cls.topics = Tensor({n, e}, 0.0);
    Tensor S_e = rand_tensor({n, e}, rng);
    Tensor y({n, k}, 0.0);
    for (int i = 0; i < n; ++i) y.at(i, i % k) = 1.0;
    ClassifyResult r = classify(tape, S_e, cls, y);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            CHECK(r.p.at(i, j) == doctest::Approx(1.0 / k).epsilon(1e-12));
    CHECK(r.loss.item() == doctest::Approx(std::log(double(k))).epsilon(1e-12));
}

TEST_CASE("classify: dominant logit drives its row near one-hot") {
    Tape tape;
    Classifier cls;
    cls.states = Tensor::from({2, 2}, {40.0, 0.0, 0.0, 40.0});
    cls.topics = Tensor({1, 2}, 0.0);
    Tensor S_e = Tensor::from({1, 2}, {1.0, 0.0});  // aligned with state 0
    Tensor y = Tensor::from({1, 2}, {1, 0});
    ClassifyResult r = classify(tape, S_e, cls, y);
    CHECK(r.p.at(0, 0) > 1.0 - 1e-12);
    CHECK(r.loss.item() < 1e-12);

    Tensor bad_y = Tensor::from({1, 2}, {1, 1});
    CHECK_THROWS_AS(classify(tape, S_e, cls, bad_y), std::invalid_argument);
}

TEST_CASE("compose: point-mass p makes train and infer modes agree exactly") {
    std::mt19937_64 rng(5);
    Tape tape;
    Classifier cls;
    cls.states = rand_tensor({3, 4}, rng);
    cls.topics = rand_tensor({2, 4}, rng);
    Tensor S_e = rand_tensor({2, 4}, rng);
    Tensor p = Tensor::from({2, 3}, {0, 1, 0, 0, 0, 1});
    DiseaseEmbedding train = compose_disease_embedding(tape, p, cls, S_e, ComposeMode::train);
    DiseaseEmbedding infer = compose_disease_embedding(tape, p, cls, S_e, ComposeMode::infer);
    for (size_t i = 0; i < train.S_d.numel(); ++i)
        CHECK(train.S_d.vec()[i] == doctest::Approx(infer.S_d.vec()[i]).epsilon(1e-12));
}

TEST_CASE("compose: uniform p yields the mean state embedding") {
    std::mt19937_64 rng(7);
    Tape tape;
    Classifier cls;
    cls.states = rand_tensor({4, 3}, rng);
    cls.topics = Tensor({1, 3}, 0.0);
    Tensor S_e = Tensor({1, 3}, 0.0);
    Tensor p = Tensor::from({1, 4}, std::vector<double>(4, 0.25));
    DiseaseEmbedding d = compose_disease_embedding(tape, p, cls, S_e, ComposeMode::train);
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (int i = 0; i < 4; ++i) mean += cls.states.at(i, j) / 4.0;
        CHECK(d.S_states.at(0, j) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("compose: zero states and topics leave S_d equal to S_e") {
    std::mt19937_64 rng(9);
    Tape tape;
    Classifier cls;
    cls.states = Tensor({3, 4}, 0.0);
    cls.topics = Tensor({2, 4}, 0.0);
    Tensor S_e = rand_tensor({2, 4}, rng);
    Tensor p = Tensor::from({2, 3}, {1, 0, 0, 0, 1, 0});
    DiseaseEmbedding d = compose_disease_embedding(tape, p, cls, S_e, ComposeMode::train);
    CHECK(d.S_d.vec() == S_e.vec());
    // the decomposition identity holds element-wise, exactly
    for (size_t i = 0; i < d.S_d.numel(); ++i)
        CHECK(d.S_d.vec()[i] ==
              d.S_states.vec()[i] + d.S_topics.vec()[i] + d.S_e.vec()[i]);
}

TEST_CASE("generator: single-word vocabulary forces certainty and zero loss") {
    std::mt19937_64 rng(11);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 1, 8, 2, 1, 16, 0, 0, 8, rng);
    Tensor S_d = rand_tensor({2, 8}, rng);
    ReportTokens target;
    target.ids = {0, 0, 0};
    Tape tape;
    auto tf = gen.teacher_forced(tape, S_d, target);
    for (double v : tf.p_word.vec()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tf.loss.item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("generator: p_word rows are stochastic") {
    std::mt19937_64 rng(13);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 12, 8, 2, 2, 16, 1, 2, 16, rng);
    Tensor S_d = rand_tensor({3, 8}, rng);
    ReportTokens target;
    target.ids = {1, 5, 7, 4, 2};
    Tape tape;
    auto tf = gen.teacher_forced(tape, S_d, target);
    REQUIRE(tf.p_word.shape() == Shape{4, 12});
    for (int i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 12; ++j) sum += tf.p_word.at(i, j);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("generator: greedy decoding is deterministic") {
    std::mt19937_64 rng(17);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 12, 8, 2, 2, 16, 1, 2, 16, rng);
    Tensor S_d = rand_tensor({3, 8}, rng);
    Tape t1, t2;
    ReportTokens a = gen.greedy(t1, S_d);
    ReportTokens b = gen.greedy(t2, S_d);
    CHECK(a.ids == b.ids);
    CHECK(a.ids.front() == 1);
    CHECK(static_cast<int>(a.ids.size()) <= 16);
}

TEST_CASE("generator: causal mask keeps earlier positions independent of later tokens") {
    std::mt19937_64 rng(19);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 12, 8, 2, 2, 16, 1, 2, 16, rng);
    Tensor S_d = rand_tensor({3, 8}, rng);
    ReportTokens t1, t2;
    t1.ids = {1, 5, 7, 4, 9, 2};
    t2.ids = {1, 5, 7, 8, 9, 2};  // differs at position 3
    Tape tape;
    Tensor p1 = gen.teacher_forced(tape, S_d, t1).p_word;
    Tensor p2 = gen.teacher_forced(tape, S_d, t2).p_word;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 12; ++j) CHECK(p1.at(i, j) == p2.at(i, j));
    CHECK_THROWS_AS(gen.teacher_forced(tape, S_d, ReportTokens{}), std::invalid_argument);
}

TEST_CASE("report token invariants") {
    ReportTokens ok;
    ok.ids = {1, 5, 6, 2};
    CHECK_NOTHROW(ok.validate(1, 2, 8));
    ReportTokens no_bos;
    no_bos.ids = {5, 6, 2};
    CHECK_THROWS_AS(no_bos.validate(1, 2, 8), std::invalid_argument);
    ReportTokens double_eos;
    double_eos.ids = {1, 2, 2};
    CHECK_THROWS_AS(double_eos.validate(1, 2, 8), std::invalid_argument);
    ReportTokens too_long;
    too_long.ids = {1, 5, 5, 5, 5, 5, 5, 2};
    CHECK_THROWS_AS(too_long.validate(1, 2, 4), std::invalid_argument);
}

TEST_CASE("interpreter: point-mass word distributions equal the hard-token pathway") {
    std::mt19937_64 rng(23);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 10, 8, 2, 1, 16, 1, 2, 16, rng);
    Classifier cls = Classifier::make(ps, "cls", 3, 4, 8, rng);
    Interpreter interp = Interpreter::make(ps, "interp", gen, cls);

    const std::vector<int> words = {5, 7, 3, 9};
    Tensor p_word({4, 10}, 0.0);
    for (int i = 0; i < 4; ++i) p_word.at(i, words[i]) = 1.0;
    Tensor y({3, 4}, 0.0);
    y.at(0, 1) = y.at(1, 0) = y.at(2, 3) = 1.0;

    Tape tape;
    const double soft = interp.loss(tape, p_word, y).item();

    // hard pathway: embed the actual tokens, pool, classify with the same
    // frozen tables
    Tensor hard = embed_rows(tape, interp.embed, words);
    Tensor pooled = mean_rows(tape, hard);
    Tensor per_topic = add_bias_row(tape, interp.topics, pooled);
    Tensor p_int = softmax(tape, matmul_nt(tape, per_topic, interp.states), 1);
    const double hard_loss = cross_entropy(tape, p_int, y).item();
    CHECK(soft == doctest::Approx(hard_loss).epsilon(1e-12));
    CHECK(soft >= 0.0);
}

TEST_CASE("interpreter parameters never receive gradients") {
    std::mt19937_64 rng(29);
    ParamStore ps;
    Generator gen = Generator::make(ps, "gen", 10, 8, 2, 1, 16, 1, 2, 16, rng);
    Classifier cls = Classifier::make(ps, "cls", 3, 4, 8, rng);
    Interpreter interp = Interpreter::make(ps, "interp", gen, cls);
    CHECK_FALSE(interp.embed.requires_grad());
    CHECK_FALSE(interp.topics.requires_grad());
    CHECK_FALSE(interp.states.requires_grad());

    Tensor S_d = rand_tensor({3, 8}, rng);
    ReportTokens target;
    target.ids = {1, 5, 7, 2};
    Tensor y({3, 4}, 0.0);
    y.at(0, 0) = y.at(1, 1) = y.at(2, 2) = 1.0;
    Tape tape;
    auto tf = gen.teacher_forced(tape, S_d, target);
    Tensor li = interp.loss(tape, tf.p_word, y);
    tape.backward(li);
    CHECK_FALSE(interp.embed.has_grad());
    CHECK_FALSE(interp.topics.has_grad());
    CHECK_FALSE(interp.states.has_grad());
    // while the generator, upstream of p_word, does get gradient
    CHECK(gen.embed.has_grad());
}
