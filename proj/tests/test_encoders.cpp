#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eir/encoders.hpp"
#include "eir/graph.hpp"

using namespace eir;

namespace {

// Plain-loop matrix helpers for the brute-force references. Deliberately
// independent of the Tensor/Tape path they are checking.
struct Mat {
    int r = 0, c = 0;
    std::vector<double> v;
    Mat() = default;
    Mat(int r_, int c_) : r(r_), c(c_), v(static_cast<size_t>(r_) * c_, 0.0) {}
    double& at(int i, int j) { return v[static_cast<size_t>(i) * c + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * c + j]; }
};

Mat from_tensor(const Tensor& t) {
    Mat m(t.rows(), t.cols());
    m.v = t.vec();
    return m;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat out(a.r, b.c);
    for (int i = 0; i < a.r; ++i)
        for (int k = 0; k < a.c; ++k)
            for (int j = 0; j < b.c; ++j) out.at(i, j) += a.at(i, k) * b.at(k, j);
    return out;
}

Mat add_bias(const Mat& a, const std::vector<double>& b) {
    Mat out = a;
    for (int i = 0; i < a.r; ++i)
        for (int j = 0; j < a.c; ++j) out.at(i, j) += b[j];
    return out;
}

// Dense multi-head self-attention + Eq.-3-style tail, no masking anywhere.
Mat dense_graph_reference(const GraphEncoder& enc, int heads) {
    const Mat f = from_tensor(enc.node_features);
    const int n = f.r, e = f.c, dk = e / heads;
    const Mat Q = add_bias(mat_mul(f, from_tensor(enc.gsa.wq.W)), enc.gsa.wq.b.vec());
    const Mat K = add_bias(mat_mul(f, from_tensor(enc.gsa.wk.W)), enc.gsa.wk.b.vec());
    const Mat V = add_bias(mat_mul(f, from_tensor(enc.gsa.wv.W)), enc.gsa.wv.b.vec());

    Mat concat(n, e);
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < n; ++i) {
            std::vector<double> logits(n);
            double mx = -1e300;
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int d = 0; d < dk; ++d)
                    dot += Q.at(i, h * dk + d) * K.at(j, h * dk + d);
                logits[j] = dot / std::sqrt(double(dk));
                mx = std::max(mx, logits[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                logits[j] = std::exp(logits[j] - mx);
                sum += logits[j];
            }
            for (int d = 0; d < dk; ++d) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += logits[j] / sum * V.at(j, h * dk + d);
                concat.at(i, h * dk + d) = acc;
            }
        }
    }
    Mat attn = add_bias(mat_mul(concat, from_tensor(enc.gsa.wo.W)), enc.gsa.wo.b.vec());

    Mat e_gsa = attn;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < e; ++j) e_gsa.at(i, j) += f.at(i, j);

    Mat hid = add_bias(mat_mul(e_gsa, from_tensor(enc.ffn.fc1.W)), enc.ffn.fc1.b.vec());
    for (double& x : hid.v) x = x > 0.0 ? x : 0.0;
    Mat ffn = add_bias(mat_mul(hid, from_tensor(enc.ffn.fc2.W)), enc.ffn.fc2.b.vec());

    Mat pre(n, e);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < e; ++j) pre.at(i, j) = ffn.at(i, j) + e_gsa.at(i, j);

    Mat out(n, e);
    const std::vector<double>& gamma = enc.ln.gamma.vec();
    const std::vector<double>& beta = enc.ln.beta.vec();
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < e; ++j) mean += pre.at(i, j);
        mean /= e;
        double var = 0.0;
        for (int j = 0; j < e; ++j) var += (pre.at(i, j) - mean) * (pre.at(i, j) - mean);
        var /= e;
        const double inv = 1.0 / std::sqrt(var + enc.ln.eps);
        for (int j = 0; j < e; ++j)
            out.at(i, j) = (pre.at(i, j) - mean) * inv * gamma[j] + beta[j];
    }
    return out;
}

KnowledgeGraph full_graph(int organs, int diseases) {
    std::vector<std::string> names = {"[CLS]"};
    for (int i = 0; i < organs; ++i) names.push_back("organ" + std::to_string(i));
    for (int i = 0; i < diseases; ++i) names.push_back("disease" + std::to_string(i));
    KnowledgeGraph g = make_graph_skeleton(organs, diseases, names);
    for (int i = 0; i < g.nodes(); ++i)
        for (int j = 0; j < g.nodes(); ++j) g.adjacency[i][j] = 1;
    return g;
}

ImageViewSet blob_views(int size, int m, uint64_t seed) {
    ImageViewSet vs;
    vs.height = vs.width = size;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int v = 0; v < m; ++v) {
        std::vector<double> px(static_cast<size_t>(size) * size);
        for (double& p : px) p = dist(rng);
        vs.views.push_back(std::move(px));
    }
    return vs;
}

}  // namespace

TEST_CASE("view pooling is element-wise max of patch features") {
    Tape tape;
    Tensor a = Tensor::from({1, 2}, {1, 5});
    Tensor b = Tensor::from({1, 2}, {3, 2});
    CHECK(emax(tape, a, b).vec() == std::vector<double>{3, 5});
}

TEST_CASE("image encoder: single view pooling is the identity") {
    std::mt19937_64 rng(3);
    ParamStore ps;
    ImageEncoder enc = ImageEncoder::make(ps, "img", 8, 4, 16, 4, 2, 2, 32, rng);
    ImageViewSet vs = blob_views(8, 1, 42);

    Tape tape;
    Tensor direct = enc.topic.forward(tape, enc.encode_view(tape, vs.views[0]));
    ModalSequence seq = enc.forward(tape, vs);
    CHECK(seq.tag == Modality::image);
    CHECK(seq.values.vec() == direct.vec());
}

TEST_CASE("image encoder: view permutation leaves output unchanged") {
    std::mt19937_64 rng(5);
    ParamStore ps;
    ImageEncoder enc = ImageEncoder::make(ps, "img", 8, 4, 16, 4, 2, 2, 32, rng);
    ImageViewSet vs = blob_views(8, 3, 77);
    ImageViewSet permuted = vs;
    std::swap(permuted.views[0], permuted.views[2]);

    Tape tape;
    Tensor a = enc.forward(tape, vs).values;
    Tensor b = enc.forward(tape, permuted).values;
    for (size_t i = 0; i < a.numel(); ++i)
        CHECK(a.vec()[i] == doctest::Approx(b.vec()[i]).epsilon(1e-12));
}

TEST_CASE("image encoder: identical seeds give identical outputs") {
    ImageViewSet vs = blob_views(8, 2, 99);
    std::vector<double> first;
    for (int rep = 0; rep < 2; ++rep) {
        std::mt19937_64 rng(1234);
        ParamStore ps;
        ImageEncoder enc = ImageEncoder::make(ps, "img", 8, 4, 16, 4, 2, 2, 32, rng);
        Tape tape;
        Tensor out = enc.forward(tape, vs).values;
        if (rep == 0)
            first = out.vec();
        else
            CHECK(out.vec() == first);
    }
}

TEST_CASE("image encoder: bad resolution is a configuration error") {
    std::mt19937_64 rng(3);
    ParamStore ps;
    CHECK_THROWS_AS(ImageEncoder::make(ps, "img", 10, 4, 16, 4, 2, 2, 32, rng),
                    std::invalid_argument);
    ImageEncoder enc = ImageEncoder::make(ps, "img2", 8, 4, 16, 4, 2, 2, 32, rng);
    ImageViewSet wrong = blob_views(12, 1, 1);
    Tape tape;
    CHECK_THROWS_AS(enc.forward(tape, wrong), std::invalid_argument);
}

TEST_CASE("text encoder: single token makes every topic row that hidden row") {
    std::mt19937_64 rng(7);
    ParamStore ps;
    TextEncoder enc = TextEncoder::make(ps, "txt", 11, 16, 5, 2, 2, 32, 24, rng);
    HistoryText h;
    h.tokens = {4};
    h.vocab = 11;

    Tape tape;
    Tensor H = enc.hidden_states(tape, h.tokens);
    ModalSequence seq = enc.forward(tape, h);
    CHECK(seq.values.rows() == 5);
    CHECK(seq.values.cols() == 16);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 16; ++j)
            CHECK(seq.values.at(i, j) == doctest::Approx(H.at(0, j)).epsilon(1e-9));

    HistoryText empty;
    empty.vocab = 11;
    CHECK_THROWS_AS(enc.forward(tape, empty), std::invalid_argument);
}

TEST_CASE("text encoder: output shape is topics x width") {
    std::mt19937_64 rng(9);
    ParamStore ps;
    TextEncoder enc = TextEncoder::make(ps, "txt", 11, 16, 5, 2, 2, 32, 24, rng);
    HistoryText h;
    h.tokens = {1, 2, 3, 4, 5, 6, 7};
    h.vocab = 11;
    Tape tape;
    ModalSequence seq = enc.forward(tape, h);
    CHECK(seq.tag == Modality::text);
    CHECK(seq.values.shape() == Shape{5, 16});
}

TEST_CASE("topic attention: sharpened queries converge to the dominant row") {
    // q1 aligns with h2 by a wide margin; scaling Q pushes row 0 onto h2
    Tape tape;
    Tensor H = Tensor::from({3, 2}, {1, 0, 0, 1, -1, 0});
    TopicAttention topic;
    topic.Q = Tensor::from({1, 2}, {0.1, 0.9});
    Tensor soft_rows = topic.forward(tape, H);

    TopicAttention sharp;
    sharp.Q = Tensor::from({1, 2}, {100, 900});
    Tensor hard_rows = sharp.forward(tape, H);
    CHECK(hard_rows.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(hard_rows.at(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    // the soft version is a strict mixture
    CHECK(soft_rows.at(0, 1) < 1.0);
}

TEST_CASE("graph encoder: full adjacency matches the dense brute-force path") {
    for (int rep = 0; rep < 5; ++rep) {
        std::mt19937_64 rng(100 + rep);
        ParamStore ps;
        GraphEncoder enc = GraphEncoder::make(ps, "graph", 7, 16, 4, 32, rng);
        KnowledgeGraph g = full_graph(2, 4);

        Tape tape;
        Tensor out = enc.forward(tape, g).values;
        Mat ref = dense_graph_reference(enc, 4);
        REQUIRE(out.rows() == 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 16; ++j)
                CHECK(std::abs(out.at(i, j) - ref.at(i, j)) < 1e-6);
    }
}

TEST_CASE("graph encoder: isolated node attends only to itself and the global node") {
    std::mt19937_64 rng(17);
    ParamStore ps;
    GraphEncoder enc = GraphEncoder::make(ps, "graph", 5, 16, 2, 32, rng);
    std::vector<std::string> names = {"[CLS]", "o0", "d0", "d1", "d2"};
    KnowledgeGraph g = make_graph_skeleton(1, 3, names);
    g.add_edge(2, 3, Relation::suggestive_of);  // d0 - d1; node 4 stays isolated

    Tape tape;
    std::vector<Tensor> attn;
    enc.forward(tape, g, &attn);
    REQUIRE(attn.size() == 2);
    for (const Tensor& w : attn) {
        for (int j = 0; j < 5; ++j) {
            if (j == 0 || j == 4)
                CHECK(w.at(4, j) > 1e-12);
            else
                CHECK(w.at(4, j) < 1e-12);
        }
        // renormalization: weight rows sum to 1 over visible nodes
        for (int i = 0; i < 5; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 5; ++j) sum += w.at(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("graph encoder: asymmetric adjacency is rejected") {
    std::mt19937_64 rng(19);
    ParamStore ps;
    GraphEncoder enc = GraphEncoder::make(ps, "graph", 4, 8, 2, 16, rng);
    KnowledgeGraph g = make_graph_skeleton(1, 2, {"[CLS]", "o", "d0", "d1"});
    g.adjacency[2][3] = 1;  // break symmetry by hand
    Tape tape;
    CHECK_THROWS_AS(enc.forward(tape, g), std::invalid_argument);
}

TEST_CASE("graph encoder: node count must match the schema") {
    std::mt19937_64 rng(21);
    ParamStore ps;
    GraphEncoder enc = GraphEncoder::make(ps, "graph", 6, 8, 2, 16, rng);
    KnowledgeGraph g = full_graph(1, 2);  // 4 nodes
    Tape tape;
    CHECK_THROWS_AS(enc.forward(tape, g), std::invalid_argument);
}
