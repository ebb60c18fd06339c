#include "srnn/data_io.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "srnn/rng.h"

namespace srnn {

namespace {

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

void put_f64(std::string& out, double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u32(out, static_cast<uint32_t>(v & 0xffffffffull));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

class Reader {
public:
    Reader(std::string data, std::string path)
        : data_(std::move(data)), path_(std::move(path)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(data_[pos_ + i]);
        pos_ += 4;
        return v;
    }
    float f32() {
        uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    double f64() {
        uint64_t lo = u32();
        uint64_t hi = u32();
        uint64_t v = (hi << 32) | lo;
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

    void need(size_t n) {
        if (pos_ + n > data_.size())
            throw Error(path_ + ": truncated, expected " + std::to_string(pos_ + n) +
                        " bytes but file has " + std::to_string(data_.size()));
    }

private:
    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("write failed: " + path);
}

constexpr char kFramesMagic[4] = {'S', 'R', 'N', 'F'};
constexpr char kCheckpointMagic[4] = {'S', 'R', 'N', 'C'};

}  // namespace

void write_frames(const std::string& path, const FrameSequence& x) {
    x.validate();
    std::string out;
    out.append(kFramesMagic, 4);
    put_u32(out, 1);
    put_u32(out, static_cast<uint32_t>(x.T));
    put_u32(out, static_cast<uint32_t>(x.D));
    for (double v : x.data) put_f32(out, static_cast<float>(v));
    spit(path, out);
}

FrameSequence read_frames(const std::string& path) {
    Reader r(slurp(path), path);
    if (r.bytes(4) != std::string(kFramesMagic, 4))
        throw Error(path + ": bad magic, not a frames file");
    uint32_t version = r.u32();
    if (version != 1)
        throw Error(path + ": unsupported frames version " + std::to_string(version));
    FrameSequence x;
    x.T = static_cast<int>(r.u32());
    x.D = static_cast<int>(r.u32());
    if (x.T < 1 || x.D < 1) throw Error(path + ": T and D must be >= 1");
    size_t n = static_cast<size_t>(x.T) * x.D;
    if (r.remaining() != n * 4)
        throw Error(path + ": truncated, expected " + std::to_string(n * 4) +
                    " payload bytes but found " + std::to_string(r.remaining()));
    x.data.resize(n);
    for (size_t i = 0; i < n; ++i) {
        float f = r.f32();
        if (!std::isfinite(f)) throw Error(path + ": non-finite frame value");
        x.data[i] = static_cast<double>(f);
    }
    return x;
}

void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
    std::string out;
    for (const auto& t : vocab.tokens()) out += t + "\n";
    spit(path, out);
}

Vocabulary read_vocabulary(const std::string& path) {
    std::stringstream ss(slurp(path));
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(ss, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    if (tokens.empty()) throw Error(path + ": empty vocabulary");
    return Vocabulary(std::move(tokens));
}

void write_labels(const std::string& path, const LabelSequence& y, const Vocabulary& vocab) {
    if (y.labels.empty()) throw Error("label sequence must be non-empty");
    std::string out;
    for (size_t i = 0; i < y.labels.size(); ++i) {
        if (i) out += " ";
        out += vocab.token(y.labels[i]);
    }
    out += "\n";
    spit(path, out);
}

LabelSequence read_labels(const std::string& path, const Vocabulary& vocab) {
    std::stringstream ss(slurp(path));
    LabelSequence y;
    std::string tok;
    while (ss >> tok) {
        int idx = vocab.index_of(tok);
        if (idx < 0) throw Error(path + ": token '" + tok + "' not in vocabulary");
        y.labels.push_back(idx);
    }
    if (y.labels.empty()) throw Error(path + ": empty label sequence");
    return y;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::stringstream ss(slurp(path));
    std::vector<ManifestEntry> entries;
    std::unordered_set<std::string> ids;
    std::string line;
    int lineno = 0;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    while (std::getline(ss, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ls(line);
        ManifestEntry e;
        std::string frames, labels;
        if (!std::getline(ls, e.id, '\t') || !std::getline(ls, frames, '\t') ||
            !std::getline(ls, labels, '\t'))
            throw Error(path + " line " + std::to_string(lineno) +
                        ": expected id<TAB>frames<TAB>labels");
        if (!ids.insert(e.id).second)
            throw Error(path + ": duplicate utterance id '" + e.id + "'");
        e.frames_path = resolve(frames);
        e.labels_path = resolve(labels);
        if (!std::filesystem::exists(e.frames_path))
            throw Error(path + ": missing frames file " + e.frames_path);
        if (!std::filesystem::exists(e.labels_path))
            throw Error(path + ": missing labels file " + e.labels_path);
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw Error(path + ": empty manifest");
    return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries)
        out += e.id + "\t" + e.frames_path + "\t" + e.labels_path + "\n";
    spit(path, out);
}

std::vector<Utterance> load_dataset(const std::string& manifest_path, const Vocabulary& vocab) {
    std::vector<Utterance> out;
    for (const auto& e : read_manifest(manifest_path)) {
        Utterance u;
        u.id = e.id;
        u.frames = read_frames(e.frames_path);
        u.labels = read_labels(e.labels_path, vocab);
        out.push_back(std::move(u));
    }
    return out;
}

CollapseMap read_collapse_map(const std::string& path, const Vocabulary& source) {
    std::stringstream ss(slurp(path));
    std::vector<int> mapping(source.size(), -1);
    std::vector<std::string> targets;
    auto target_index = [&](const std::string& t) {
        for (size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == t) return static_cast<int>(i);
        targets.push_back(t);
        return static_cast<int>(targets.size() - 1);
    };
    std::string src, dst;
    while (ss >> src >> dst) {
        int i = source.index_of(src);
        if (i < 0) throw Error(path + ": source token '" + src + "' not in vocabulary");
        mapping[i] = target_index(dst);
    }
    for (int i = 0; i < source.size(); ++i)
        if (mapping[i] < 0)
            throw Error(path + ": no mapping for token '" + source.token(i) + "'");
    return {std::move(mapping), Vocabulary(std::move(targets))};
}

void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab,
                     const std::string& model_config_text) {
    std::string out;
    out.append(kCheckpointMagic, 4);
    put_u32(out, 1);
    put_u32(out, static_cast<uint32_t>(model.dims.input_dim));
    put_u32(out, static_cast<uint32_t>(model_config_text.size()));
    out += model_config_text;
    put_u32(out, static_cast<uint32_t>(vocab.size()));
    for (const auto& t : vocab.tokens()) {
        put_u32(out, static_cast<uint32_t>(t.size()));
        out += t;
    }
    int count = 0;
    for_each_tensor(model, [&](const std::string&, const ad::Tensor&) { ++count; });
    put_u32(out, static_cast<uint32_t>(count));
    for_each_tensor(model, [&](const std::string& name, const ad::Tensor& t) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(t.shape.size()));
        for (int e : t.shape) put_u32(out, static_cast<uint32_t>(e));
        for (double v : t.v) put_f64(out, v);
    });
    spit(path, out);
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected_config,
                           bool allow_mismatch) {
    Reader r(slurp(path), path);
    if (r.bytes(4) != std::string(kCheckpointMagic, 4))
        throw Error(path + ": bad magic, not a checkpoint");
    uint32_t version = r.u32();
    if (version != 1)
        throw Error(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.input_dim = static_cast<int>(r.u32());
    ck.model_config_text = r.bytes(r.u32());
    if (!expected_config.empty() && expected_config != ck.model_config_text && !allow_mismatch)
        throw Error(path + ": checkpoint hyperparameters do not match the running "
                           "configuration (pass the override flag to load anyway)");
    uint32_t vsize = r.u32();
    std::vector<std::string> tokens;
    for (uint32_t i = 0; i < vsize; ++i) tokens.push_back(r.bytes(r.u32()));
    ck.vocab = Vocabulary(std::move(tokens));

    RunConfig rc = parse_config_text(ck.model_config_text);
    ck.model = make_model(model_dims(rc, ck.input_dim, ck.vocab.size()), 0);

    uint32_t count = r.u32();
    std::map<std::string, ad::Tensor> loaded;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes(r.u32());
        uint32_t rank = r.u32();
        std::vector<int> shape;
        size_t n = 1;
        for (uint32_t j = 0; j < rank; ++j) {
            shape.push_back(static_cast<int>(r.u32()));
            n *= static_cast<size_t>(shape.back());
        }
        ad::Tensor t = ad::Tensor::zeros(shape);
        for (size_t j = 0; j < n; ++j) {
            t.v[j] = r.f64();
            if (!std::isfinite(t.v[j]))
                throw Error(path + ": non-finite value in tensor " + name);
        }
        loaded[name] = std::move(t);
    }
    if (!r.at_end()) throw Error(path + ": trailing bytes after checkpoint payload");

    for_each_tensor(ck.model, [&](const std::string& name, ad::Tensor& t) {
        auto it = loaded.find(name);
        if (it == loaded.end()) throw Error(path + ": checkpoint missing tensor " + name);
        if (it->second.shape != t.shape)
            throw Error(path + ": tensor " + name + " has unexpected shape");
        t = std::move(it->second);
        loaded.erase(it);
    });
    if (!loaded.empty())
        throw Error(path + ": checkpoint has unknown tensor " + loaded.begin()->first);
    return ck;
}

void SynthConfig::validate() const {
    if (vocab_size < 1) throw Error("synth: vocab_size must be >= 1");
    if (dim < 1) throw Error("synth: dim must be >= 1");
    if (dur_min < 1 || dur_max < dur_min) throw Error("synth: need 1 <= dur_min <= dur_max");
    if (sigma < 0.0) throw Error("synth: sigma must be >= 0");
    if (j_min < 1 || j_max < j_min) throw Error("synth: need 1 <= j_min <= j_max");
    if (n_train < 1 || n_valid < 0) throw Error("synth: need n_train >= 1, n_valid >= 0");
}

SynthCorpus gen_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "frames");
    fs::create_directories(fs::path(out_dir) / "labels");

    std::vector<std::string> tokens;
    for (int i = 0; i < cfg.vocab_size; ++i) tokens.push_back("p" + std::to_string(i));
    Vocabulary vocab(tokens);

    SynthCorpus corpus;
    corpus.vocab_path = (fs::path(out_dir) / "vocab.txt").string();
    write_vocabulary(corpus.vocab_path, vocab);

    Rng rng(mix_seed(cfg.seed, 0x73796e7468ull));
    // Per-label mean vectors.
    std::vector<std::vector<double>> means(cfg.vocab_size, std::vector<double>(cfg.dim));
    for (auto& m : means)
        for (double& v : m) v = rng.gaussian();

    std::string segments_tsv;
    std::vector<ManifestEntry> train_entries, valid_entries;
    int total = cfg.n_train + cfg.n_valid;
    for (int u = 0; u < total; ++u) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "utt%04d", u);
        std::string id = idbuf;

        int J = static_cast<int>(rng.uniform_int(cfg.j_min, cfg.j_max));
        LabelSequence y;
        Segmentation seg;
        seg.boundaries.push_back(0);
        for (int j = 0; j < J; ++j) {
            y.labels.push_back(static_cast<int>(rng.uniform_int(0, cfg.vocab_size - 1)));
            int d = static_cast<int>(rng.uniform_int(cfg.dur_min, cfg.dur_max));
            seg.boundaries.push_back(seg.boundaries.back() + d);
        }
        int T = seg.boundaries.back();
        FrameSequence x;
        x.T = T;
        x.D = cfg.dim;
        x.frame_period_ms = cfg.frame_period_ms;
        x.data.resize(static_cast<size_t>(T) * cfg.dim);
        for (int j = 0; j < J; ++j)
            for (int t = seg.start(j); t < seg.end(j); ++t)
                for (int d = 0; d < cfg.dim; ++d)
                    x.data[static_cast<size_t>(t) * cfg.dim + d] =
                        means[y.labels[j]][d] + cfg.sigma * rng.gaussian();

        ManifestEntry e;
        e.id = id;
        e.frames_path = (fs::path(out_dir) / "frames" / (id + ".srnf")).string();
        e.labels_path = (fs::path(out_dir) / "labels" / (id + ".txt")).string();
        write_frames(e.frames_path, x);
        write_labels(e.labels_path, y, vocab);

        segments_tsv += id;
        for (int b : seg.boundaries) segments_tsv += (b == 0 ? "\t" : " ") + std::to_string(b);
        segments_tsv += "\n";

        if (u < cfg.n_train)
            train_entries.push_back(std::move(e));
        else
            valid_entries.push_back(std::move(e));
    }

    corpus.train_manifest = (fs::path(out_dir) / "train.tsv").string();
    write_manifest(corpus.train_manifest, train_entries);
    if (!valid_entries.empty()) {
        corpus.valid_manifest = (fs::path(out_dir) / "valid.tsv").string();
        write_manifest(corpus.valid_manifest, valid_entries);
    }
    spit((fs::path(out_dir) / "segments.tsv").string(), segments_tsv);
    return corpus;
}

int edit_distance(const std::vector<int>& hyp, const std::vector<int>& ref) {
    const size_t n = hyp.size(), m = ref.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

int edit_distance(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    const size_t n = hyp.size(), m = ref.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double per(const LabelSequence& hyp, const LabelSequence& ref) {
    if (ref.labels.empty()) throw Error("per: reference must be non-empty");
    return static_cast<double>(edit_distance(hyp.labels, ref.labels)) /
           static_cast<double>(ref.labels.size());
}

}  // namespace srnn
