#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "srnn/data_io.h"
#include "srnn/rng.h"

using namespace srnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("srnn_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp_bytes(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

// Exhaustive minimal edit script search by iterative deepening: can hyp be
// turned into ref with at most `budget` substitutions/insertions/deletions?
bool editable_within(const std::vector<int>& hyp, size_t i, const std::vector<int>& ref,
                     size_t j, int budget) {
    while (i < hyp.size() && j < ref.size() && hyp[i] == ref[j]) {
        ++i;
        ++j;
    }
    if (i == hyp.size() && j == ref.size()) return true;
    int slack = static_cast<int>(hyp.size() - i) - static_cast<int>(ref.size() - j);
    if (budget == 0 || std::abs(slack) > budget) return false;
    if (i < hyp.size() && j < ref.size() &&
        editable_within(hyp, i + 1, ref, j + 1, budget - 1))
        return true;  // substitute
    if (i < hyp.size() && editable_within(hyp, i + 1, ref, j, budget - 1)) return true;
    if (j < ref.size() && editable_within(hyp, i, ref, j + 1, budget - 1)) return true;
    return false;
}

int brute_edit_distance(const std::vector<int>& hyp, const std::vector<int>& ref) {
    for (int k = 0;; ++k)
        if (editable_within(hyp, 0, ref, 0, k)) return k;
}

}  // namespace

TEST_CASE("frames round-trip is bit-identical") {
    TempDir dir;
    Rng rng(3);
    FrameSequence x;
    x.T = 7;
    x.D = 4;
    x.data.resize(28);
    for (double& v : x.data) v = rng.uniform(-3.0, 3.0);
    // f32 payload: quantize the expectation through float.
    for (double& v : x.data) v = static_cast<double>(static_cast<float>(v));

    std::string p = dir.file("a.srnf");
    write_frames(p, x);
    FrameSequence y = read_frames(p);
    CHECK(y.T == 7);
    CHECK(y.D == 4);
    CHECK(y.data == x.data);

    write_frames(dir.file("b.srnf"), y);
    CHECK(slurp_bytes(p) == slurp_bytes(dir.file("b.srnf")));
}

TEST_CASE("frames reader rejects corruption") {
    TempDir dir;
    FrameSequence x;
    x.T = 2;
    x.D = 2;
    x.data = {1, 2, 3, 4};
    std::string p = dir.file("c.srnf");
    write_frames(p, x);

    std::string bytes = slurp_bytes(p);
    std::ofstream(dir.file("trunc.srnf"), std::ios::binary)
        << bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_WITH_AS(read_frames(dir.file("trunc.srnf")),
                         doctest::Contains("truncated"), Error);

    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir.file("magic.srnf"), std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(read_frames(dir.file("magic.srnf")),
                         doctest::Contains("bad magic"), Error);

    FrameSequence empty;
    empty.T = 0;
    empty.D = 2;
    CHECK_THROWS_AS(write_frames(dir.file("zero.srnf"), empty), Error);

    FrameSequence inf_frames;
    inf_frames.T = 1;
    inf_frames.D = 1;
    inf_frames.data = {std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(write_frames(dir.file("inf.srnf"), inf_frames), Error);
}

TEST_CASE("labels and vocabulary round-trip") {
    TempDir dir;
    Vocabulary v({"ah", "eh", "ix"});
    write_vocabulary(dir.file("vocab.txt"), v);
    Vocabulary v2 = read_vocabulary(dir.file("vocab.txt"));
    CHECK(v2.tokens() == v.tokens());

    LabelSequence y{{2, 0, 1, 0}};
    write_labels(dir.file("y.txt"), y, v);
    CHECK(read_labels(dir.file("y.txt"), v) == y);

    std::ofstream(dir.file("bad.txt")) << "ah zz\n";
    CHECK_THROWS_WITH_AS(read_labels(dir.file("bad.txt"), v),
                         doctest::Contains("'zz' not in vocabulary"), Error);
    std::ofstream(dir.file("empty.txt")) << "";
    CHECK_THROWS_AS(read_labels(dir.file("empty.txt"), v), Error);
}

TEST_CASE("manifest parsing and path resolution") {
    TempDir dir;
    Vocabulary v({"a", "b"});
    FrameSequence x;
    x.T = 2;
    x.D = 1;
    x.data = {0.0, 1.0};
    fs::create_directories(dir.path / "sub");
    write_frames(dir.file("sub/u0.srnf"), x);
    write_labels(dir.file("sub/u0.txt"), LabelSequence{{0}}, v);
    std::ofstream(dir.file("m.tsv")) << "u0\tsub/u0.srnf\tsub/u0.txt\n";
    auto entries = read_manifest(dir.file("m.tsv"));
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].id == "u0");
    CHECK(fs::path(entries[0].frames_path).is_absolute());

    std::ofstream(dir.file("dup.tsv")) << "u0\tsub/u0.srnf\tsub/u0.txt\n"
                                       << "u0\tsub/u0.srnf\tsub/u0.txt\n";
    CHECK_THROWS_WITH_AS(read_manifest(dir.file("dup.tsv")),
                         doctest::Contains("duplicate"), Error);
    std::ofstream(dir.file("missing.tsv")) << "u1\tnope.srnf\tsub/u0.txt\n";
    CHECK_THROWS_WITH_AS(read_manifest(dir.file("missing.tsv")),
                         doctest::Contains("missing frames"), Error);
}

TEST_CASE("collapse map loading") {
    TempDir dir;
    Vocabulary v({"a", "b", "c"});
    std::ofstream(dir.file("map.txt")) << "a x\nb x\nc y\n";
    CollapseMap m = read_collapse_map(dir.file("map.txt"), v);
    CHECK(m.mapping == std::vector<int>{0, 0, 1});
    CHECK(m.target.tokens() == std::vector<std::string>{"x", "y"});

    std::ofstream(dir.file("partial.txt")) << "a x\nb x\n";
    CHECK_THROWS_WITH_AS(read_collapse_map(dir.file("partial.txt"), v),
                         doctest::Contains("no mapping for token 'c'"), Error);
}

TEST_CASE("checkpoint round-trip and mismatch rejection") {
    TempDir dir;
    RunConfig cfg;
    cfg.encoder.num_layers = 1;
    cfg.encoder.hidden = 3;
    cfg.encoder.subsample_after = {};
    cfg.encoder.proj = 3;
    cfg.embed = 4;
    cfg.dw = 3;
    cfg.dh = 3;
    cfg.ddur = 2;
    cfg.clamp_frames = 4;
    Vocabulary vocab({"a", "b"});
    Model m = make_model(model_dims(cfg, 5, vocab.size()), 11);

    std::string p1 = dir.file("ck1.srnc");
    save_checkpoint(p1, m, vocab, serialize_model_config(cfg));
    Checkpoint ck = load_checkpoint(p1);
    CHECK(ck.vocab.tokens() == vocab.tokens());
    CHECK(ck.input_dim == 5);

    // save -> load -> save produces byte-identical files.
    std::string p2 = dir.file("ck2.srnc");
    save_checkpoint(p2, ck.model, ck.vocab, ck.model_config_text);
    CHECK(slurp_bytes(p1) == slurp_bytes(p2));

    // Tensor contents survive.
    bool all_equal = true;
    for_each_tensor(m, [&](const std::string& name, const ad::Tensor& t) {
        for_each_tensor(ck.model, [&](const std::string& n2, const ad::Tensor& t2) {
            if (n2 == name && t2.v != t.v) all_equal = false;
        });
    });
    CHECK(all_equal);

    // Hyperparameter mismatch is rejected unless overridden.
    RunConfig other = cfg;
    other.encoder.hidden = 4;
    CHECK_THROWS_WITH_AS(load_checkpoint(p1, serialize_model_config(other)),
                         doctest::Contains("do not match"), Error);
    CHECK_NOTHROW(load_checkpoint(p1, serialize_model_config(other), true));
    CHECK_NOTHROW(load_checkpoint(p1, serialize_model_config(cfg)));
}

TEST_CASE("synthetic corpus is deterministic and well-formed") {
    TempDir d1, d2;
    SynthConfig cfg;
    cfg.n_train = 6;
    cfg.n_valid = 2;
    cfg.seed = 42;
    SynthCorpus c1 = gen_synthetic(cfg, d1.file("corpus"));
    SynthCorpus c2 = gen_synthetic(cfg, d2.file("corpus"));

    Vocabulary v = read_vocabulary(c1.vocab_path);
    CHECK(v.size() == cfg.vocab_size);
    auto train = load_dataset(c1.train_manifest, v);
    auto valid = load_dataset(c1.valid_manifest, v);
    CHECK(train.size() == 6);
    CHECK(valid.size() == 2);
    for (const auto& u : train) {
        CHECK(u.frames.D == cfg.dim);
        int J = u.labels.size();
        CHECK(J >= cfg.j_min);
        CHECK(J <= cfg.j_max);
        CHECK(u.frames.T >= J * cfg.dur_min);
        CHECK(u.frames.T <= J * cfg.dur_max);
    }

    // Same seed => identical corpus bytes.
    auto t2 = load_dataset(c2.train_manifest, v);
    for (size_t i = 0; i < train.size(); ++i) {
        CHECK(train[i].frames.data == t2[i].frames.data);
        CHECK(train[i].labels == t2[i].labels);
    }

    // Ground-truth segmentations exist and are valid diagnostics.
    std::ifstream segs(d1.file("corpus/segments.tsv"));
    CHECK(segs.good());
}

TEST_CASE("noiseless unit-duration corpus equals label means") {
    TempDir dir;
    SynthConfig cfg;
    cfg.sigma = 0.0;
    cfg.dur_min = 1;
    cfg.dur_max = 1;
    cfg.n_train = 4;
    cfg.n_valid = 0;
    cfg.seed = 7;
    SynthCorpus c = gen_synthetic(cfg, dir.file("corpus"));
    Vocabulary v = read_vocabulary(c.vocab_path);
    auto data = load_dataset(c.train_manifest, v);
    // With sigma = 0 and d = 1, every frame is exactly its label's mean, so a
    // 1-nearest-mean classifier over observed (frame, label) pairs is
    // consistent: equal labels <=> equal frames.
    for (const auto& a : data)
        for (int t = 0; t < a.frames.T; ++t)
            for (const auto& b : data)
                for (int s = 0; s < b.frames.T; ++s) {
                    bool same_label = a.labels.labels[t] == b.labels.labels[s];
                    std::vector<double> fa(a.frames.data.begin() + t * a.frames.D,
                                           a.frames.data.begin() + (t + 1) * a.frames.D);
                    std::vector<double> fb(b.frames.data.begin() + s * b.frames.D,
                                           b.frames.data.begin() + (s + 1) * b.frames.D);
                    CHECK(same_label == (fa == fb));
                }
}

TEST_CASE("per basics") {
    LabelSequence ref{{0, 1}};
    CHECK(per(ref, ref) == 0.0);
    CHECK(per(LabelSequence{{0}}, ref) == 0.5);  // one deletion over two tokens
    CHECK_THROWS_AS(per(ref, LabelSequence{{}}), Error);
    // |len(h) - len(r)| / len(r) lower-bounds per.
    LabelSequence h{{0, 0, 0, 0, 0}};
    CHECK(per(h, ref) >= 3.0 / 2.0);
}

TEST_CASE("per matches the exhaustive edit-script oracle") {
    // All pairs with lengths <= 6 over a 3-token alphabet would be ~1.2M
    // pairs; the unit test samples, the acceptance suite runs the full grid.
    Rng rng(91);
    for (int rep = 0; rep < 400; ++rep) {
        int n = static_cast<int>(rng.uniform_int(0, 6));
        int m = static_cast<int>(rng.uniform_int(1, 6));
        std::vector<int> hyp(n), ref(m);
        for (int& x : hyp) x = static_cast<int>(rng.uniform_int(0, 2));
        for (int& x : ref) x = static_cast<int>(rng.uniform_int(0, 2));
        CHECK(edit_distance(hyp, ref) == brute_edit_distance(hyp, ref));
    }
}
