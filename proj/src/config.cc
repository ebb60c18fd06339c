#include "srnn/config.h"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace srnn {

void TrainConfig::validate() const {
    if (lr_init <= 0.0) throw Error("train: lr must be > 0");
    if (decay_factor <= 1.0) throw Error("train: decay must be > 1");
    if (max_epochs < 1) throw Error("train: max_epochs must be >= 1");
    if (patience < 1) throw Error("train: patience must be >= 1");
    if (batch < 1) throw Error("train: batch must be >= 1");
    if (clip_norm <= 0.0) throw Error("train: clip_norm must be > 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw Error("train: dropout must lie in [0, 1)");
}

void RunConfig::validate() const {
    encoder.validate();
    train.validate();
    if (embed < 1 || dw < 1 || dh < 1 || ddur < 1)
        throw Error("features: dimensions must be >= 1");
    if (clamp_frames < 1) throw Error("crf: clamp_frames must be >= 1");
    if (frame_period_ms <= 0.0) throw Error("crf: frame_period_ms must be > 0");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KeyValue {
    std::map<std::string, std::string> values;  // "section.key" -> raw value

    bool has(const std::string& k) const { return values.count(k) > 0; }
    double num(const std::string& k) const {
        try {
            size_t pos = 0;
            double v = std::stod(values.at(k), &pos);
            if (pos != values.at(k).size()) throw Error("");
            return v;
        } catch (...) {
            throw Error("config: bad numeric value for key '" + k + "'");
        }
    }
    int integer(const std::string& k) const {
        double v = num(k);
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw Error("config: key '" + k + "' must be an integer");
        return i;
    }
    bool boolean(const std::string& k) const {
        const std::string& v = values.at(k);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw Error("config: key '" + k + "' must be true or false");
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* mode_name(SubsampleMode m) {
    switch (m) {
        case SubsampleMode::kSkip: return "skip";
        case SubsampleMode::kConcat: return "concat";
        case SubsampleMode::kAdd: return "add";
    }
    return "skip";
}

SubsampleMode mode_from(const std::string& s) {
    if (s == "skip") return SubsampleMode::kSkip;
    if (s == "concat") return SubsampleMode::kConcat;
    if (s == "add") return SubsampleMode::kAdd;
    throw Error("config: subsample_mode must be skip, concat, or add (got '" + s + "')");
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (cur.empty()) continue;
        try {
            out.push_back(std::stoi(cur));
        } catch (...) {
            throw Error("config: bad integer list entry '" + cur + "'");
        }
    }
    return out;
}

std::string join_int_list(const std::vector<int>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(xs[i]);
    }
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    static const std::map<std::string, bool> known = {
        {"encoder.layers", true},     {"encoder.hidden", true},
        {"encoder.window", true},     {"encoder.subsample_after", true},
        {"encoder.subsample_mode", true}, {"encoder.proj", true},
        {"features.embed", true},     {"features.dw", true},
        {"features.dh", true},        {"features.ddur", true},
        {"features.use_duration", true},
        {"crf.clamp_frames", true},   {"crf.clamp_ms", true},
        {"crf.frame_period_ms", true},
        {"train.lr", true},           {"train.decay", true},
        {"train.max_epochs", true},   {"train.patience", true},
        {"train.min_lr", true},       {"train.batch", true},
        {"train.clip_norm", true},    {"train.seed", true},
        {"train.target_error", true}, {"train.dropout", true},
        {"train.threads", true},
        {"data.vocab", true},         {"data.train_manifest", true},
        {"data.valid_manifest", true}, {"data.collapse", true},
    };

    KeyValue kv;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string s = trim(line);
        size_t hash = s.find_first_of("#;");
        if (hash != std::string::npos) s = trim(s.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw Error("config line " + std::to_string(lineno) +
                                             ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = section + "." + trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (!known.count(key))
            throw Error("config: unknown key '" + key + "'");
        if (kv.values.count(key)) throw Error("config: duplicate key '" + key + "'");
        kv.values[key] = val;
    }

    RunConfig c;
    if (kv.has("encoder.layers")) c.encoder.num_layers = kv.integer("encoder.layers");
    if (kv.has("encoder.hidden")) c.encoder.hidden = kv.integer("encoder.hidden");
    if (kv.has("encoder.window")) c.encoder.window = kv.integer("encoder.window");
    if (kv.has("encoder.subsample_after"))
        c.encoder.subsample_after = parse_int_list(kv.values.at("encoder.subsample_after"));
    else
        c.encoder.subsample_after = {1};
    if (kv.has("encoder.subsample_mode"))
        c.encoder.mode = mode_from(kv.values.at("encoder.subsample_mode"));
    if (kv.has("encoder.proj")) c.encoder.proj = kv.integer("encoder.proj");

    if (kv.has("features.embed")) c.embed = kv.integer("features.embed");
    if (kv.has("features.dw")) c.dw = kv.integer("features.dw");
    if (kv.has("features.dh")) c.dh = kv.integer("features.dh");
    if (kv.has("features.ddur")) c.ddur = kv.integer("features.ddur");
    if (kv.has("features.use_duration")) c.use_duration = kv.boolean("features.use_duration");

    if (kv.has("crf.frame_period_ms")) c.frame_period_ms = kv.num("crf.frame_period_ms");
    if (kv.has("crf.clamp_frames") && kv.has("crf.clamp_ms"))
        throw Error("config: clamp_frames and clamp_ms are mutually exclusive");
    if (kv.has("crf.clamp_frames")) {
        c.clamp_frames = kv.integer("crf.clamp_frames");
    } else if (kv.has("crf.clamp_ms")) {
        double ms = kv.num("crf.clamp_ms");
        c.clamp_frames = static_cast<int>(ms / c.frame_period_ms + 0.5);
        if (c.clamp_frames < 1) throw Error("config: clamp_ms shorter than one frame");
    }

    if (kv.has("train.lr")) c.train.lr_init = kv.num("train.lr");
    if (kv.has("train.decay")) c.train.decay_factor = kv.num("train.decay");
    if (kv.has("train.max_epochs")) c.train.max_epochs = kv.integer("train.max_epochs");
    if (kv.has("train.patience")) c.train.patience = kv.integer("train.patience");
    if (kv.has("train.min_lr")) c.train.min_lr = kv.num("train.min_lr");
    if (kv.has("train.batch")) c.train.batch = kv.integer("train.batch");
    if (kv.has("train.clip_norm")) c.train.clip_norm = kv.num("train.clip_norm");
    if (kv.has("train.seed")) c.train.seed = static_cast<uint64_t>(kv.num("train.seed"));
    if (kv.has("train.target_error")) c.train.target_error = kv.num("train.target_error");
    if (kv.has("train.dropout")) c.train.dropout_rate = kv.num("train.dropout");
    if (kv.has("train.threads")) c.train.threads = kv.integer("train.threads");

    if (kv.has("data.vocab")) c.vocab_path = kv.values.at("data.vocab");
    if (kv.has("data.train_manifest")) c.train_manifest = kv.values.at("data.train_manifest");
    if (kv.has("data.valid_manifest")) c.valid_manifest = kv.values.at("data.valid_manifest");
    if (kv.has("data.collapse")) c.collapse_path = kv.values.at("data.collapse");

    c.encoder.dropout_rate = c.train.dropout_rate;
    c.validate();
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_model_config(const RunConfig& c) {
    std::string s;
    s += "[encoder]\n";
    s += "layers = " + std::to_string(c.encoder.num_layers) + "\n";
    s += "hidden = " + std::to_string(c.encoder.hidden) + "\n";
    s += "window = " + std::to_string(c.encoder.window) + "\n";
    s += "subsample_after = " + join_int_list(c.encoder.subsample_after) + "\n";
    s += std::string("subsample_mode = ") + mode_name(c.encoder.mode) + "\n";
    s += "proj = " + std::to_string(c.encoder.proj) + "\n";
    s += "[features]\n";
    s += "embed = " + std::to_string(c.embed) + "\n";
    s += "dw = " + std::to_string(c.dw) + "\n";
    s += "dh = " + std::to_string(c.dh) + "\n";
    s += "ddur = " + std::to_string(c.ddur) + "\n";
    s += std::string("use_duration = ") + (c.use_duration ? "true" : "false") + "\n";
    s += "[crf]\n";
    s += "clamp_frames = " + std::to_string(c.clamp_frames) + "\n";
    s += "frame_period_ms = " + fmt(c.frame_period_ms) + "\n";
    return s;
}

std::string serialize_full_config(const RunConfig& c) {
    std::string s = serialize_model_config(c);
    s += "[train]\n";
    s += "lr = " + fmt(c.train.lr_init) + "\n";
    s += "decay = " + fmt(c.train.decay_factor) + "\n";
    s += "max_epochs = " + std::to_string(c.train.max_epochs) + "\n";
    s += "patience = " + std::to_string(c.train.patience) + "\n";
    s += "min_lr = " + fmt(c.train.min_lr) + "\n";
    s += "batch = " + std::to_string(c.train.batch) + "\n";
    s += "clip_norm = " + fmt(c.train.clip_norm) + "\n";
    s += "seed = " + std::to_string(c.train.seed) + "\n";
    s += "target_error = " + fmt(c.train.target_error) + "\n";
    s += "dropout = " + fmt(c.train.dropout_rate) + "\n";
    s += "threads = " + std::to_string(c.train.threads) + "\n";
    return s;
}

ModelDims model_dims(const RunConfig& c, int input_dim, int vocab_size) {
    ModelDims d;
    d.input_dim = input_dim;
    d.vocab = vocab_size;
    d.encoder = c.encoder;
    d.embed = c.embed;
    d.dw = c.dw;
    d.dh = c.dh;
    d.ddur = c.ddur;
    d.use_duration = c.use_duration;
    d.clamp_frames = c.clamp_frames;
    d.validate();
    return d;
}

}  // namespace srnn
