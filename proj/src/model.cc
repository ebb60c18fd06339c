#include "srnn/model.h"

#include <cassert>
#include <algorithm>

namespace srnn {

void ModelDims::validate() const {
    encoder.validate();
    if (input_dim < 1) throw Error("model: input_dim must be >= 1");
    if (vocab < 1) throw Error("model: vocabulary size must be >= 1");
    if (embed < 1 || dw < 1 || dh < 1 || ddur < 1)
        throw Error("model: feature dimensions must be >= 1");
    if (clamp_frames < 1) throw Error("model: clamp_frames must be >= 1");
}

namespace {

// Fan-scaled uniform init. The flat-scale alternative (0.05 everywhere)
// leaves a 3-layer stack with near-zero forward gain and the encoder never
// wakes up within the learning-rate schedule's lifetime.
ad::Tensor fan_tensor(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    ad::Tensor t = ad::Tensor::zeros(std::move(shape));
    double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : t.v) x = rng.uniform(-s, s);
    return t;
}

ad::Tensor matrix_init(int rows, int cols, Rng& rng) {
    return fan_tensor({rows, cols}, cols, rows, rng);
}

LstmParams make_lstm(int input_dim, int hidden, Rng& rng) {
    LstmParams p;
    // Fused gate matrices: fan-out counts one gate block.
    p.wx = fan_tensor({4 * hidden, input_dim}, input_dim, hidden, rng);
    p.wh = fan_tensor({4 * hidden, hidden}, hidden, hidden, rng);
    p.b = ad::Tensor::zeros({4 * hidden});
    for (int i = hidden; i < 2 * hidden; ++i) p.b.v[i] = 1.0;  // forget gate
    return p;
}

}  // namespace

Model make_model(const ModelDims& dims, uint64_t seed) {
    dims.validate();
    Rng rng(mix_seed(seed, 0x696e6974ull));
    Model m;
    m.dims = dims;

    const EncoderConfig& ec = dims.encoder;
    int in = dims.input_dim;
    for (int layer = 0; layer < ec.num_layers; ++layer) {
        m.encoder.fwd.push_back(make_lstm(in, ec.hidden, rng));
        m.encoder.bwd.push_back(make_lstm(in, ec.hidden, rng));
        in = 2 * ec.hidden;
        bool subsampled = std::find(ec.subsample_after.begin(), ec.subsample_after.end(),
                                    layer + 1) != ec.subsample_after.end();
        if (subsampled && ec.mode == SubsampleMode::kConcat) in *= ec.window;
    }
    m.encoder.proj_w = matrix_init(ec.proj, in, rng);
    m.encoder.proj_b = ad::Tensor::zeros({ec.proj});

    const int L = dims.clamp_subsampled();
    m.feat.label_embed = matrix_init(dims.vocab, dims.embed, rng);
    m.feat.seg = make_lstm(ec.proj, dims.dh, rng);
    m.feat.dur_embed = matrix_init(L + 1, dims.ddur, rng);
    m.feat.g_wu = matrix_init(dims.embed, dims.dw, rng);
    m.feat.g_wh = matrix_init(dims.dw, dims.dh, rng);
    m.feat.g_wd = matrix_init(dims.dw, dims.ddur, rng);
    m.feat.g_b1 = ad::Tensor::zeros({dims.dw});
    m.feat.g_w2 = matrix_init(dims.dw, dims.dw, rng);
    m.feat.g_b2 = ad::Tensor::zeros({dims.dw});
    m.feat.w = fan_tensor({dims.dw}, dims.dw, 1, rng);
    m.feat.use_duration = dims.use_duration;
    return m;
}

ModelVars bind(ad::Tape& tape, const Model& m) {
    ModelVars v;
    v.encoder = bind(tape, m.encoder);
    v.feat = bind(tape, m.feat);
    return v;
}

namespace {

template <class ModelT, class Fn>
void walk_tensors(ModelT& m, const Fn& fn) {
    for (size_t i = 0; i < m.encoder.fwd.size(); ++i) {
        std::string p = "enc.l" + std::to_string(i);
        fn(p + ".f.wx", m.encoder.fwd[i].wx);
        fn(p + ".f.wh", m.encoder.fwd[i].wh);
        fn(p + ".f.b", m.encoder.fwd[i].b);
        fn(p + ".b.wx", m.encoder.bwd[i].wx);
        fn(p + ".b.wh", m.encoder.bwd[i].wh);
        fn(p + ".b.b", m.encoder.bwd[i].b);
    }
    fn("enc.proj.w", m.encoder.proj_w);
    fn("enc.proj.b", m.encoder.proj_b);
    fn("feat.embed", m.feat.label_embed);
    fn("feat.seg.wx", m.feat.seg.wx);
    fn("feat.seg.wh", m.feat.seg.wh);
    fn("feat.seg.b", m.feat.seg.b);
    fn("feat.dur", m.feat.dur_embed);
    fn("feat.g.wu", m.feat.g_wu);
    fn("feat.g.wh", m.feat.g_wh);
    fn("feat.g.wd", m.feat.g_wd);
    fn("feat.g.b1", m.feat.g_b1);
    fn("feat.g.w2", m.feat.g_w2);
    fn("feat.g.b2", m.feat.g_b2);
    fn("feat.w", m.feat.w);
}

}  // namespace

void for_each_tensor(Model& m,
                     const std::function<void(const std::string&, ad::Tensor&)>& fn) {
    walk_tensors(m, fn);
}

void for_each_tensor(const Model& m,
                     const std::function<void(const std::string&, const ad::Tensor&)>& fn) {
    walk_tensors(m, fn);
}

void for_each_var(const ModelVars& v,
                  const std::function<void(const std::string&, ad::VarId)>& fn) {
    for (size_t i = 0; i < v.encoder.fwd.size(); ++i) {
        std::string p = "enc.l" + std::to_string(i);
        fn(p + ".f.wx", v.encoder.fwd[i].wx);
        fn(p + ".f.wh", v.encoder.fwd[i].wh);
        fn(p + ".f.b", v.encoder.fwd[i].b);
        fn(p + ".b.wx", v.encoder.bwd[i].wx);
        fn(p + ".b.wh", v.encoder.bwd[i].wh);
        fn(p + ".b.b", v.encoder.bwd[i].b);
    }
    fn("enc.proj.w", v.encoder.proj_w);
    fn("enc.proj.b", v.encoder.proj_b);
    fn("feat.embed", v.feat.label_embed);
    fn("feat.seg.wx", v.feat.seg.wx);
    fn("feat.seg.wh", v.feat.seg.wh);
    fn("feat.seg.b", v.feat.seg.b);
    fn("feat.dur", v.feat.dur_embed);
    fn("feat.g.wu", v.feat.g_wu);
    fn("feat.g.wh", v.feat.g_wh);
    fn("feat.g.wd", v.feat.g_wd);
    fn("feat.g.b1", v.feat.g_b1);
    fn("feat.g.w2", v.feat.g_w2);
    fn("feat.g.b2", v.feat.g_b2);
    fn("feat.w", v.feat.w);
}

GradMap collect_grads(const ad::Tape& tape, const ModelVars& vars) {
    GradMap grads;
    for_each_var(vars, [&](const std::string& name, ad::VarId id) {
        grads[name] = tape.grad(id);
    });
    return grads;
}

int64_t num_parameters(const Model& m) {
    int64_t n = 0;
    for_each_tensor(m, [&](const std::string&, const ad::Tensor& t) { n += t.numel(); });
    return n;
}

}  // namespace srnn
