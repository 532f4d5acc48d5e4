#include "eir/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eir/params.hpp"

namespace eir {

namespace {

const std::vector<std::string> kOrganPool = {
    "lung", "heart", "pleura", "bone", "mediastinum", "diaphragm", "airway"};

const std::vector<std::string> kDiseasePool = {
    "opacity",      "edema",     "effusion",  "pneumonia", "atelectasis",
    "consolidation", "fracture",  "nodule",    "cardiomegaly", "emphysema",
    "fibrosis",     "hernia",    "infiltration", "mass",   "pneumothorax",
    "thickening",   "calcification", "congestion", "scarring", "lesion"};

const std::vector<std::string> kSymptomPool = {
    "cough",     "fever",    "pain",      "dyspnea",  "fatigue",
    "wheezing",  "chills",   "nausea",    "dizziness", "sweating",
    "hemoptysis", "weakness", "malaise",  "anorexia", "palpitations",
    "stridor",   "cyanosis", "clubbing",  "tenderness", "swelling"};

const std::vector<std::string> kTemplateWords = {
    "there", "is",  "no",      "possible",   "findings", "unremarkable",
    "patient", "with", "and",  "denies",     "maybe",    "complaints", "."};

constexpr int kBlobCell = 4;  // pixels per blob grid cell

uint64_t sample_seed(uint64_t world_seed, int id) {
    // splitmix64 over (seed, id) so per-sample streams are independent
    uint64_t z = world_seed + 0x9E3779B97F4A7C15ull * static_cast<uint64_t>(id + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void WorldConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("world config: " + msg);
    };
    check(corpus >= 1 && corpus <= 1000000, "corpus must be in 1..1000000");
    check(split_train + split_val + split_test == 100, "splits must sum to 100");
    check(split_train > 0 && split_val >= 0 && split_test >= 0, "split percents must be sane");
    check(topics >= 1 && topics <= static_cast<int>(kDiseasePool.size()),
          "topics must be in 1.." + std::to_string(kDiseasePool.size()));
    check(diseases == topics, "diseases must equal topics (one term per topic)");
    check(states >= 2 && states <= 4, "states must be in 2..4");
    check(organs >= 1 && organs <= static_cast<int>(kOrganPool.size()),
          "organs must be in 1.." + std::to_string(kOrganPool.size()));
    check(image_size >= kBlobCell && image_size % kBlobCell == 0,
          "image size must be a positive multiple of " + std::to_string(kBlobCell));
    const int cells = (image_size / kBlobCell) * (image_size / kBlobCell);
    check(topics <= cells, "image too small to place one blob cell per topic");
    check(views >= 1 && views <= 8, "views must be in 1..8");
    check(noise >= 0.0 && noise < 0.5, "noise amplitude must be in [0, 0.5)");
    check(eta >= 1, "eta must be positive");
}

Tensor SyntheticSample::y_tensor(int k) const {
    const int n = static_cast<int>(states.size());
    Tensor y({n, k}, 0.0);
    for (int t = 0; t < n; ++t) y.at(t, states[t]) = 1.0;
    return y;
}

int Vocab::id(const std::string& w) const {
    auto it = index.find(w);
    if (it == index.end()) throw std::invalid_argument("word not in vocabulary: " + w);
    return it->second;
}

const std::string& Vocab::word(int i) const {
    if (i < 0 || i >= size())
        throw std::out_of_range("token id " + std::to_string(i) + " outside vocabulary");
    return words[i];
}

std::vector<std::string> Vocab::to_words(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(word(i));
    return out;
}

uint64_t Vocab::hash() const {
    std::string joined;
    for (const auto& w : words) {
        joined += w;
        joined += '\n';
    }
    return fnv1a(joined);
}

LabelSchema Dataset::label_schema() const {
    LabelSchema s;
    s.topics = cfg.topics;
    s.states = cfg.states;
    s.disease_terms = disease_terms;
    return s;
}

const std::vector<SyntheticSample>& Dataset::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw std::invalid_argument("unknown split: " + name);
}

int Dataset::max_history_len() const {
    // "patient with" + per-topic clause of up to 2 words + "and" separators
    return 2 + cfg.topics * 3 + 2;
}

int Dataset::max_report_len() const {
    // per-topic clause of up to 4 tokens, plus BOS/EOS and slack
    return cfg.topics * 4 + 4;
}

namespace {

Vocab build_vocab(const Dataset& ds) {
    Vocab v;
    v.words = {"<pad>", "<bos>", "<eos>"};
    for (size_t i = 0; i < v.words.size(); ++i) v.index[v.words[i]] = static_cast<int>(i);
    auto push = [&](const std::string& w) {
        if (v.index.count(w))
            throw std::invalid_argument("vocabulary collision on word: " + w);
        v.index[w] = static_cast<int>(v.words.size());
        v.words.push_back(w);
    };
    for (const auto& w : kTemplateWords) push(w);
    for (const auto& w : ds.disease_terms) push(w);
    for (const auto& w : ds.symptom_terms) push(w);
    return v;
}

KnowledgeGraph build_base_schema(const Dataset& ds) {
    std::vector<std::string> names;
    names.push_back("[CLS]");
    for (const auto& o : ds.organ_terms) names.push_back(o);
    for (const auto& d : ds.disease_terms) names.push_back(d);
    KnowledgeGraph g = make_graph_skeleton(ds.cfg.organs, ds.cfg.diseases, names);
    for (int t = 0; t < ds.cfg.topics; ++t)
        g.add_edge(g.disease_node(t), g.organ_node(ds.disease_organ[t]), Relation::located_at);
    g.validate();
    return g;
}

std::vector<int> make_report(const Dataset& ds, const std::vector<int>& states) {
    const Vocab& v = ds.vocab;
    std::vector<int> out;
    const int period = v.id(".");
    for (int t = 0; t < ds.cfg.topics; ++t) {
        const int s = states[t];
        if (s == ds.cfg.states - 1) continue;  // unmentioned
        if (s == 0) {
            out.push_back(v.id("there"));
            out.push_back(v.id("is"));
            out.push_back(v.id(ds.disease_terms[t]));
        } else if (s == 1) {
            out.push_back(v.id("no"));
            out.push_back(v.id(ds.disease_terms[t]));
        } else {
            out.push_back(v.id("possible"));
            out.push_back(v.id(ds.disease_terms[t]));
        }
        out.push_back(period);
    }
    if (out.empty()) {
        out = {v.id("findings"), v.id("unremarkable"), period};
    }
    return out;
}

std::vector<int> make_history(const Dataset& ds, const std::vector<int>& states) {
    const Vocab& v = ds.vocab;
    std::vector<int> out = {v.id("patient"), v.id("with")};
    bool any = false;
    for (int t = 0; t < ds.cfg.topics; ++t) {
        const int s = states[t];
        if (s == ds.cfg.states - 1) continue;
        if (any) out.push_back(v.id("and"));
        if (s == 0) {
            out.push_back(v.id(ds.symptom_terms[t]));
        } else if (s == 1) {
            out.push_back(v.id("denies"));
            out.push_back(v.id(ds.symptom_terms[t]));
        } else {
            out.push_back(v.id("maybe"));
            out.push_back(v.id(ds.symptom_terms[t]));
        }
        any = true;
    }
    if (!any) {
        out.push_back(v.id("no"));
        out.push_back(v.id("complaints"));
    }
    return out;
}

std::vector<int> draw_states(const WorldConfig& cfg, std::mt19937_64& rng) {
    // A latent syndrome makes nearby topics co-occur, so report similarity
    // carries real signal for retrieval.
    std::uniform_int_distribution<int> syn_dist(0, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int syndrome = syn_dist(rng);
    std::vector<int> states(cfg.topics);
    for (int t = 0; t < cfg.topics; ++t) {
        const int r = t % 4;
        const double p_pos = (r == syndrome || r == (syndrome + 1) % 4) ? 0.8 : 0.25;
        if (u(rng) < p_pos) {
            states[t] = 0;
            continue;
        }
        if (cfg.states == 2) {
            states[t] = 1;  // unmentioned
        } else if (cfg.states == 3) {
            states[t] = u(rng) < 0.6 ? 1 : 2;
        } else {
            const double x = u(rng);
            states[t] = x < 0.5 ? 1 : (x < 0.7 ? 2 : 3);
        }
    }
    return states;
}

std::vector<std::vector<double>> draw_views(const WorldConfig& cfg,
                                            const std::vector<int>& states,
                                            std::mt19937_64& rng) {
    const int n = cfg.image_size;
    const int grid = n / kBlobCell;
    std::uniform_real_distribution<double> noise(0.0, cfg.noise);
    std::vector<std::vector<double>> views(cfg.views);
    for (int vi = 0; vi < cfg.views; ++vi) {
        auto& img = views[vi];
        img.resize(static_cast<size_t>(n) * n);
        for (auto& px : img) px = noise(rng);
        for (int t = 0; t < cfg.topics; ++t) {
            if (states[t] != 0) continue;  // blobs mark positive topics only
            const int cr = t / grid, cc = t % grid;
            // 2x2 bright blob at the cell center
            for (int dy = 1; dy <= 2; ++dy)
                for (int dx = 1; dx <= 2; ++dx)
                    img[static_cast<size_t>(cr * kBlobCell + dy) * n + cc * kBlobCell + dx] = 1.0;
        }
    }
    return views;
}

}  // namespace

std::vector<bool> image_positive_topics(const SyntheticSample& s, const WorldConfig& cfg) {
    const int n = cfg.image_size;
    const int grid = n / kBlobCell;
    std::vector<bool> positive(cfg.topics, false);
    for (int t = 0; t < cfg.topics; ++t) {
        const int cr = t / grid, cc = t % grid;
        bool all_views = true;
        for (const auto& img : s.views) {
            for (int dy = 1; dy <= 2 && all_views; ++dy)
                for (int dx = 1; dx <= 2; ++dx)
                    if (img[static_cast<size_t>(cr * kBlobCell + dy) * n + cc * kBlobCell + dx] <=
                        0.5) {
                        all_views = false;
                        break;
                    }
        }
        positive[t] = all_views;
    }
    return positive;
}

std::vector<int> history_states(const std::vector<int>& history, const Dataset& ds) {
    const Vocab& v = ds.vocab;
    std::vector<int> states(ds.cfg.topics, ds.cfg.states - 1);
    auto topic_of = [&](int id) {
        for (int t = 0; t < ds.cfg.topics; ++t)
            if (v.id(ds.symptom_terms[t]) == id) return t;
        return -1;
    };
    // clauses after "patient with", separated by "and"
    const int and_id = v.id("and");
    const int denies_id = v.id("denies");
    const int maybe_id = v.id("maybe");
    std::vector<std::vector<int>> clauses(1);
    for (size_t i = 2; i < history.size(); ++i) {
        if (history[i] == and_id)
            clauses.emplace_back();
        else
            clauses.back().push_back(history[i]);
    }
    for (const auto& clause : clauses) {
        if (clause.empty()) continue;
        if (clause.size() == 1) {
            const int t = topic_of(clause[0]);
            if (t >= 0) states[t] = 0;
        } else if (clause.size() == 2 && clause[0] == denies_id) {
            const int t = topic_of(clause[1]);
            if (t >= 0 && ds.cfg.states >= 3) states[t] = 1;
        } else if (clause.size() == 2 && clause[0] == maybe_id) {
            const int t = topic_of(clause[1]);
            if (t >= 0 && ds.cfg.states == 4) states[t] = 2;
        }
    }
    return states;
}

Dataset generate_corpus(const WorldConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.cfg = cfg;
    ds.organ_terms.assign(kOrganPool.begin(), kOrganPool.begin() + cfg.organs);
    ds.disease_terms.assign(kDiseasePool.begin(), kDiseasePool.begin() + cfg.diseases);
    ds.symptom_terms.assign(kSymptomPool.begin(), kSymptomPool.begin() + cfg.topics);
    ds.disease_organ.resize(cfg.topics);
    for (int t = 0; t < cfg.topics; ++t) ds.disease_organ[t] = t % cfg.organs;
    ds.vocab = build_vocab(ds);
    ds.base_graph = build_base_schema(ds);

    const LabelSchema schema = ds.label_schema();
    std::vector<SyntheticSample> all;
    all.reserve(cfg.corpus);
    for (int id = 0; id < cfg.corpus; ++id) {
        std::mt19937_64 rng(sample_seed(cfg.seed, id));
        SyntheticSample s;
        s.id = id;
        s.states = draw_states(cfg, rng);
        s.views = draw_views(cfg, s.states, rng);
        s.history = make_history(ds, s.states);
        s.report = make_report(ds, s.states);

        // decodability oracles: any mismatch is a generator bug
        long warnings = 0;
        if (label_report(ds.vocab.to_words(s.report), schema, &warnings) != s.states ||
            warnings != 0)
            throw std::logic_error("report labeling round-trip failed for sample " +
                                   std::to_string(id));
        const std::vector<bool> blob = image_positive_topics(s, cfg);
        const std::vector<int> hist = history_states(s.history, ds);
        for (int t = 0; t < cfg.topics; ++t) {
            const bool pos = s.states[t] == 0;
            if (blob[t] != pos)
                throw std::logic_error("image blob oracle failed for sample " +
                                       std::to_string(id));
            if ((hist[t] == 0) != pos)
                throw std::logic_error("history oracle failed for sample " + std::to_string(id));
        }
        all.push_back(std::move(s));
    }

    const int n_val = cfg.corpus * cfg.split_val / 100;
    const int n_test = cfg.corpus * cfg.split_test / 100;
    const int n_train = cfg.corpus - n_val - n_test;
    ds.train.assign(all.begin(), all.begin() + n_train);
    ds.val.assign(all.begin() + n_train, all.begin() + n_train + n_val);
    ds.test.assign(all.begin() + n_train + n_val, all.end());
    return ds;
}

namespace {

void write_split(const Dataset& ds, const std::vector<SyntheticSample>& samples,
                 const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    for (const auto& s : samples) {
        os << "id=" << s.id << "|y=";
        for (int t = 0; t < ds.cfg.topics; ++t)
            for (int k = 0; k < ds.cfg.states; ++k) {
                if (t || k) os << ' ';
                os << (s.states[t] == k ? 1 : 0);
            }
        os << "|views=";
        bool first = true;
        for (const auto& view : s.views)
            for (double px : view) {
                if (!first) os << ' ';
                os << fmt_double(px);
                first = false;
            }
        os << "|history=";
        for (size_t i = 0; i < s.history.size(); ++i)
            os << (i ? " " : "") << ds.vocab.word(s.history[i]);
        os << "|report=";
        for (size_t i = 0; i < s.report.size(); ++i)
            os << (i ? " " : "") << ds.vocab.word(s.report[i]);
        os << '\n';
    }
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

SyntheticSample parse_sample(const Dataset& ds, const std::string& line) {
    SyntheticSample s;
    std::unordered_map<std::string, std::string> fields;
    size_t pos = 0;
    while (pos < line.size()) {
        const size_t eq = line.find('=', pos);
        const size_t bar = line.find('|', pos);
        if (eq == std::string::npos) throw std::runtime_error("malformed sample line");
        const std::string key = line.substr(pos, eq - pos);
        const std::string value =
            line.substr(eq + 1, (bar == std::string::npos ? line.size() : bar) - eq - 1);
        fields[key] = value;
        if (bar == std::string::npos) break;
        pos = bar + 1;
    }
    s.id = std::stoi(fields.at("id"));
    const auto y_flat = split_ws(fields.at("y"));
    if (static_cast<int>(y_flat.size()) != ds.cfg.topics * ds.cfg.states)
        throw std::runtime_error("bad y length in sample " + std::to_string(s.id));
    s.states.assign(ds.cfg.topics, -1);
    for (int t = 0; t < ds.cfg.topics; ++t)
        for (int k = 0; k < ds.cfg.states; ++k)
            if (y_flat[t * ds.cfg.states + k] == "1") s.states[t] = k;
    for (int st : s.states)
        if (st < 0) throw std::runtime_error("y row not one-hot in sample " + std::to_string(s.id));
    const auto pixels = split_ws(fields.at("views"));
    const size_t per_view = static_cast<size_t>(ds.cfg.image_size) * ds.cfg.image_size;
    if (pixels.size() != per_view * ds.cfg.views)
        throw std::runtime_error("bad view length in sample " + std::to_string(s.id));
    s.views.assign(ds.cfg.views, std::vector<double>(per_view));
    for (int v = 0; v < ds.cfg.views; ++v)
        for (size_t i = 0; i < per_view; ++i)
            s.views[v][i] = std::stod(pixels[v * per_view + i]);
    for (const auto& w : split_ws(fields.at("history"))) s.history.push_back(ds.vocab.id(w));
    for (const auto& w : split_ws(fields.at("report"))) s.report.push_back(ds.vocab.id(w));
    return s;
}

std::string meta_line(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_split(ds, ds.train, dir + "/train.txt");
    write_split(ds, ds.val, dir + "/val.txt");
    write_split(ds, ds.test, dir + "/test.txt");

    std::ofstream vf(dir + "/vocab.txt", std::ios::trunc);
    for (const auto& w : ds.vocab.words) vf << w << '\n';

    std::ofstream gf(dir + "/graph.txt", std::ios::trunc);
    const KnowledgeGraph& g = ds.base_graph;
    for (int i = 0; i < g.nodes(); ++i) {
        const char* role = i == 0 ? "global" : (i <= g.organs ? "organ" : "disease");
        gf << "node " << i << ' ' << g.node_names[i] << ' ' << role << '\n';
    }
    for (const auto& [src, dst, kind] : g.relations)
        gf << "edge " << g.node_names[src] << ' ' << g.node_names[dst] << ' '
           << relation_name(static_cast<Relation>(kind)) << '\n';

    std::ofstream mf(dir + "/meta.txt", std::ios::trunc);
    mf << "seed=" << ds.cfg.seed << '\n'
       << "corpus=" << ds.cfg.corpus << '\n'
       << "split=" << ds.cfg.split_train << '/' << ds.cfg.split_val << '/' << ds.cfg.split_test
       << '\n'
       << "topics=" << ds.cfg.topics << '\n'
       << "states=" << ds.cfg.states << '\n'
       << "organs=" << ds.cfg.organs << '\n'
       << "diseases=" << ds.cfg.diseases << '\n'
       << "image_size=" << ds.cfg.image_size << '\n'
       << "views=" << ds.cfg.views << '\n'
       << "noise=" << fmt_double(ds.cfg.noise) << '\n'
       << "eta=" << ds.cfg.eta << '\n'
       << "organ_terms=" << meta_line(ds.organ_terms) << '\n'
       << "disease_terms=" << meta_line(ds.disease_terms) << '\n'
       << "symptom_terms=" << meta_line(ds.symptom_terms) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/meta.txt");
    if (!mf) throw std::runtime_error("cannot open dataset meta: " + dir + "/meta.txt");
    Dataset ds;
    std::string line;
    std::unordered_map<std::string, std::string> meta;
    while (std::getline(mf, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ds.cfg.seed = std::stoull(meta.at("seed"));
    ds.cfg.corpus = std::stoi(meta.at("corpus"));
    {
        const std::string sp = meta.at("split");
        const size_t a = sp.find('/');
        const size_t b = sp.find('/', a + 1);
        ds.cfg.split_train = std::stoi(sp.substr(0, a));
        ds.cfg.split_val = std::stoi(sp.substr(a + 1, b - a - 1));
        ds.cfg.split_test = std::stoi(sp.substr(b + 1));
    }
    ds.cfg.topics = std::stoi(meta.at("topics"));
    ds.cfg.states = std::stoi(meta.at("states"));
    ds.cfg.organs = std::stoi(meta.at("organs"));
    ds.cfg.diseases = std::stoi(meta.at("diseases"));
    ds.cfg.image_size = std::stoi(meta.at("image_size"));
    ds.cfg.views = std::stoi(meta.at("views"));
    ds.cfg.noise = std::stod(meta.at("noise"));
    ds.cfg.eta = std::stoi(meta.at("eta"));
    ds.organ_terms = split_csv(meta.at("organ_terms"));
    ds.disease_terms = split_csv(meta.at("disease_terms"));
    ds.symptom_terms = split_csv(meta.at("symptom_terms"));
    ds.disease_organ.resize(ds.cfg.topics);
    for (int t = 0; t < ds.cfg.topics; ++t) ds.disease_organ[t] = t % ds.cfg.organs;

    std::ifstream vf(dir + "/vocab.txt");
    if (!vf) throw std::runtime_error("cannot open vocabulary: " + dir + "/vocab.txt");
    while (std::getline(vf, line)) {
        if (line.empty()) continue;
        ds.vocab.index[line] = static_cast<int>(ds.vocab.words.size());
        ds.vocab.words.push_back(line);
    }
    ds.base_graph = build_base_schema(ds);

    auto read_split = [&](const std::string& name, std::vector<SyntheticSample>& out) {
        std::ifstream f(dir + "/" + name);
        if (!f) throw std::runtime_error("cannot open split: " + dir + "/" + name);
        std::string l;
        while (std::getline(f, l))
            if (!l.empty()) out.push_back(parse_sample(ds, l));
    };
    read_split("train.txt", ds.train);
    read_split("val.txt", ds.val);
    read_split("test.txt", ds.test);
    return ds;
}

TfIdfIndex TfIdfIndex::build(const std::vector<const SyntheticSample*>& corpus, int vocab_size) {
    TfIdfIndex idx;
    idx.docs_ = corpus;
    const size_t n = corpus.size();
    std::vector<long> df(vocab_size, 0);
    std::vector<std::unordered_map<int, long>> tf(n);
    for (size_t d = 0; d < n; ++d) {
        for (int tok : corpus[d]->report) tf[d][tok] += 1;
        for (const auto& [tok, cnt] : tf[d]) {
            (void)cnt;
            df[tok] += 1;
        }
    }
    idx.idf_.resize(vocab_size);
    for (int t = 0; t < vocab_size; ++t)
        idx.idf_[t] = std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
    idx.weights_.resize(n);
    idx.norms_.resize(n);
    for (size_t d = 0; d < n; ++d) {
        double norm2 = 0.0;
        for (const auto& [tok, cnt] : tf[d]) {
            const double w = cnt * idx.idf_[tok];
            idx.weights_[d][tok] = w;
            norm2 += w * w;
        }
        idx.norms_[d] = std::sqrt(norm2);
    }
    return idx;
}

std::vector<std::pair<const SyntheticSample*, double>> TfIdfIndex::retrieve(
    const std::vector<int>& query_report, int exclude_id, int eta) const {
    std::unordered_map<int, double> q;
    for (int tok : query_report) q[tok] += 1.0;
    double qnorm2 = 0.0;
    for (auto& [tok, cnt] : q) {
        cnt *= idf_[tok];
        qnorm2 += cnt * cnt;
    }
    const double qnorm = std::sqrt(qnorm2);

    std::vector<std::pair<const SyntheticSample*, double>> scored;
    scored.reserve(docs_.size());
    for (size_t d = 0; d < docs_.size(); ++d) {
        if (docs_[d]->id == exclude_id) continue;
        double dot = 0.0;
        for (const auto& [tok, w] : q) {
            auto it = weights_[d].find(tok);
            if (it != weights_[d].end()) dot += w * it->second;
        }
        const double denom = qnorm * norms_[d];
        scored.emplace_back(docs_[d], denom > 0.0 ? dot / denom : 0.0);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first->id < b.first->id;
    });
    if (static_cast<int>(scored.size()) > eta) scored.resize(eta);
    return scored;
}

std::vector<const SyntheticSample*> retrieve_top_eta(const SyntheticSample& query,
                                                     const TfIdfIndex& index, int eta) {
    std::vector<const SyntheticSample*> out;
    for (const auto& [doc, score] : index.retrieve(query.report, query.id, eta)) {
        (void)score;
        out.push_back(doc);
    }
    return out;
}

std::vector<TripletEdge> extract_triplets(const std::vector<int>& report, const Dataset& ds) {
    // positively asserted diseases: clauses of the form "there is <d>"
    const Vocab& v = ds.vocab;
    const int there_id = v.id("there"), is_id = v.id("is"), period = v.id(".");
    std::set<int> positive;
    std::vector<int> clause;
    auto flush = [&] {
        if (clause.size() == 3 && clause[0] == there_id && clause[1] == is_id) {
            for (int t = 0; t < ds.cfg.topics; ++t)
                if (v.id(ds.disease_terms[t]) == clause[2]) positive.insert(t);
        }
        clause.clear();
    };
    for (int tok : report) {
        if (tok == period)
            flush();
        else
            clause.push_back(tok);
    }
    flush();

    std::vector<TripletEdge> out;
    for (int t : positive)
        out.push_back({ds.disease_terms[t], ds.organ_terms[ds.disease_organ[t]],
                       Relation::located_at});
    for (auto i = positive.begin(); i != positive.end(); ++i)
        for (auto j = std::next(i); j != positive.end(); ++j)
            out.push_back({ds.disease_terms[*i], ds.disease_terms[*j], Relation::suggestive_of});
    return out;
}

void apply_triplets(KnowledgeGraph& g, const std::vector<TripletEdge>& triplets,
                    const Dataset& ds, long* skipped_terms) {
    auto node_of = [&](const std::string& term) {
        for (int i = 0; i < g.nodes(); ++i)
            if (g.node_names[i] == term) return i;
        return -1;
    };
    (void)ds;
    for (const auto& tr : triplets) {
        const int a = node_of(tr.src);
        const int b = node_of(tr.dst);
        if (a < 0 || b < 0) {
            if (skipped_terms) ++(*skipped_terms);
            continue;
        }
        g.add_edge(a, b, tr.kind);
    }
}

KnowledgeGraph build_graph(const std::vector<const SyntheticSample*>& retrieved,
                           const Dataset& ds, long* skipped_terms) {
    KnowledgeGraph g = ds.base_graph;
    update_graph(g, retrieved, ds, skipped_terms);
    return g;
}

void update_graph(KnowledgeGraph& g, const std::vector<const SyntheticSample*>& new_retrieval,
                  const Dataset& ds, long* skipped_terms) {
    for (const SyntheticSample* s : new_retrieval)
        apply_triplets(g, extract_triplets(s->report, ds), ds, skipped_terms);
    g.validate();
}

}  // namespace eir
